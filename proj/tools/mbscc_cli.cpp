// mbscc: current-coupon experiments from the command line.
//
//   mbscc compare  [flags]   m0 + m1 against the contraction fixed point (CSV report)
//   mbscc verify   [flags]   pool-simulation cross-checks (exit 4 on failure)
//   mbscc baseline [flags]   closed-form m0 only
//   mbscc contract [flags]   contraction oracle only
//   mbscc xi       [flags]   table of Xi(x)
//
// Exit codes: 0 success, 2 configuration error, 3 solver error, 4 verification failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mbscc/driver.hpp"

namespace {

enum Exit { ok = 0, config_error = 2, solver_error = 3, verification_failed = 4 };

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<int> steps_per_year;
    std::optional<double> grid_lo, grid_hi;
    std::optional<std::size_t> grid_n;
    std::optional<std::string> decomposition;
    std::optional<double> tol_bps;
    std::optional<std::size_t> max_iter;
    std::optional<std::string> out;
    std::optional<unsigned> workers;
    bool quiet = false;
};

mbscc::ExperimentConfig resolve(const Overrides& o) {
    mbscc::ExperimentConfig c;
    c.cir.r0 = c.cir.theta;
    if (!o.config_path.empty()) c = mbscc::load_config(o.config_path);
    if (o.seed) c.mc.seed = *o.seed;
    if (o.paths) c.mc.n_paths = *o.paths;
    if (o.steps_per_year) c.mc.steps_per_year = *o.steps_per_year;
    if (o.grid_lo) c.grid.lo = *o.grid_lo;
    if (o.grid_hi) c.grid.hi = *o.grid_hi;
    if (o.grid_n) c.grid.n = *o.grid_n;
    if (o.decomposition) c.decomposition = mbscc::parse_decomposition(*o.decomposition);
    if (o.tol_bps) c.contraction.tol = *o.tol_bps * 1e-4;
    if (o.max_iter) c.contraction.max_iter = *o.max_iter;
    if (o.out) c.output = *o.out;
    if (o.workers) c.workers = *o.workers;
    c.validate();
    return c;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f || !(f << text) || !f.flush()) throw mbscc::IoError("cannot write " + path);
}

void write_report(mbscc::ComparisonReport report, const std::string& path) {
    report.timestamp = mbscc::utc_timestamp();
    write_text(path, mbscc::to_csv(report));
}

std::string verify_table(const mbscc::VerificationSummary& s) {
    std::ostringstream out;
    out << "check,passed,measured,threshold,detail\n";
    for (const auto& c : s.checks)
        out << c.name << ',' << (c.passed ? "pass" : "FAIL") << ',' << mbscc::format_value(c.measured) << ','
            << mbscc::format_value(c.threshold) << ",\"" << c.detail << "\"\n";
    out << "# lln n_loans,mean_deviation,mean_deviation_se,rms_deviation\n";
    for (const auto& r : s.lln)
        out << "# lln " << r.n_loans << ',' << mbscc::format_value(r.mean_deviation.value) << ','
            << mbscc::format_value(r.mean_deviation.std_error) << ',' << mbscc::format_value(r.rms_deviation) << '\n';
    return out.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mortgage current-coupon experiments"};
    app.set_version_flag("--version", mbscc::version_string());
    app.require_subcommand(1);
    app.fallthrough();

    Overrides o;
    app.add_option("--config", o.config_path, "JSON configuration file");
    app.add_option("--seed", o.seed, "random seed");
    app.add_option("--paths", o.paths, "Monte Carlo paths per grid point");
    app.add_option("--steps-per-year", o.steps_per_year, "time steps per year");
    app.add_option("--grid-lo", o.grid_lo, "lowest reporting-grid rate");
    app.add_option("--grid-hi", o.grid_hi, "highest reporting-grid rate");
    app.add_option("--grid-n", o.grid_n, "number of reporting-grid points");
    app.add_option("--decomposition", o.decomposition, "baseline split: zero or const")
        ->check(CLI::IsMember({"zero", "const", "zero-baseline", "constant-baseline"}));
    app.add_option("--tol-bps", o.tol_bps, "contraction tolerance in basis points");
    app.add_option("--max-iter", o.max_iter, "contraction iteration cap");
    app.add_option("--out", o.out, "output file (default: standard output)");
    app.add_option("--workers", o.workers, "worker threads");
    app.add_flag("--quiet", o.quiet, "no progress messages");

    auto* compare = app.add_subcommand("compare", "m0 + m1 against the contraction oracle");
    auto* verify = app.add_subcommand("verify", "pool-simulation cross-checks");
    auto* baseline = app.add_subcommand("baseline", "closed-form m0 only");
    auto* contract = app.add_subcommand("contract", "contraction oracle only");
    auto* xi_cmd = app.add_subcommand("xi", "table of Xi(x)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    const mbscc::RunLog log{o.quiet ? nullptr : &std::cerr};
    try {
        if (xi_cmd->parsed()) {
            const double lo = o.grid_lo.value_or(0.1);
            const double hi = o.grid_hi.value_or(30.0);
            const std::size_t n = o.grid_n.value_or(60);
            std::ostringstream out;
            out << "x,xi\n";
            for (const auto& [x, v] : mbscc::xi_table(lo, hi, n))
                out << mbscc::format_value(x) << ',' << mbscc::format_value(v) << '\n';
            write_text(o.out.value_or(""), out.str());
            return ok;
        }

        const auto config = resolve(o);
        if (compare->parsed()) {
            const auto result = mbscc::run_compare(config, log);
            write_report(result.report, config.output);
            if (!result.contraction.converged) {
                std::cerr << "error: contraction did not converge within " << config.contraction.max_iter
                          << " iterations\n";
                return solver_error;
            }
            return ok;
        }
        if (baseline->parsed()) {
            write_report(mbscc::run_baseline(config), config.output);
            return ok;
        }
        if (contract->parsed()) {
            const auto [report, contraction] = mbscc::run_contract(config, log);
            write_report(report, config.output);
            if (!contraction.converged) {
                std::cerr << "error: contraction did not converge within " << config.contraction.max_iter
                          << " iterations\n";
                return solver_error;
            }
            return ok;
        }
        if (verify->parsed()) {
            const auto summary = mbscc::run_verify(config, log);
            write_text(config.output, verify_table(summary));
            return summary.passed() ? ok : verification_failed;
        }
    } catch (const mbscc::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return config_error;
    } catch (const mbscc::IoError& e) {
        std::cerr << "output error: " << e.what() << '\n';
        return config_error;
    } catch (const mbscc::SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return solver_error;
    } catch (const mbscc::DomainError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return solver_error;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return solver_error;
    }
    return ok;
}
