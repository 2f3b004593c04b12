#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "factor_model.hpp"

namespace mbscc {

/// Frozen path sets for every point of a reporting grid.
///
/// Grid point i gets paths started at X_0 = x_i. All points share the run seed, so
/// path k at every grid point is driven by the same noise substream; the paths
/// themselves are identical on every call, which keeps fixed-point iterations on a
/// single, well-defined discretized system.
template <class B>
concept PathBank = requires(const B& bank, std::size_t i) {
    { bank.size() } -> std::convertible_to<std::size_t>;
    { bank.rate(i) } -> std::convertible_to<double>;
    { bank.source(i) } -> PathSource;
};

/// Regenerates paths on demand; memory use is one path per worker.
class StreamedPathBank {
public:
    StreamedPathBank(const CirParams& params, TimeGrid grid, std::vector<double> rates, std::size_t n_paths,
                     std::uint64_t seed)
        : params_(params), grid_(std::move(grid)), rates_(std::move(rates)), n_paths_(n_paths), seed_(seed) {
        for (double x : rates_) params_.with_r0(x).validate();
        detail::require_config(n_paths >= 1, "StreamedPathBank: n_paths must be >= 1");
    }

    std::size_t size() const noexcept { return rates_.size(); }
    double rate(std::size_t i) const noexcept { return rates_[i]; }
    std::span<const double> rates() const noexcept { return rates_; }
    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t n_paths() const noexcept { return n_paths_; }
    std::uint64_t seed() const noexcept { return seed_; }

    CirPathStream source(std::size_t i) const { return {params_.with_r0(rates_[i]), grid_, n_paths_, seed_}; }

private:
    CirParams params_;
    TimeGrid grid_;
    std::vector<double> rates_;
    std::size_t n_paths_;
    std::uint64_t seed_;
};

/// Holds every path set in memory. Same numbers as StreamedPathBank with equal arguments.
class StoredPathBank {
public:
    StoredPathBank(const CirParams& params, const TimeGrid& grid, std::vector<double> rates, std::size_t n_paths,
                   std::uint64_t seed, unsigned workers = 1)
        : rates_(std::move(rates)) {
        sets_.reserve(rates_.size());
        for (double x : rates_) sets_.emplace_back(params.with_r0(x), grid, n_paths, seed, workers);
    }

    std::size_t size() const noexcept { return rates_.size(); }
    double rate(std::size_t i) const noexcept { return rates_[i]; }
    std::span<const double> rates() const noexcept { return rates_; }
    const PathSet& source(std::size_t i) const noexcept { return sets_[i]; }

private:
    std::vector<double> rates_;
    std::vector<PathSet> sets_;
};

static_assert(PathBank<StreamedPathBank>);
static_assert(PathBank<StoredPathBank>);

}  // namespace mbscc
