#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "nldecay/grid.hpp"

namespace nldecay::detail {

/// Process-wide cache of FFTW plans keyed by (dim, n, direction).
/// Planning is serialized; plans are executed through the new-array
/// interface, which FFTW documents as thread-safe.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(int dim, std::size_t n, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        const auto key = std::make_tuple(dim, n, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        int dims[3] = {static_cast<int>(n), static_cast<int>(n), static_cast<int>(n)};
        std::size_t total = 1;
        for (int a = 0; a < dim; ++a) total *= n;
        std::vector<std::complex<double>> scratch(total);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan plan = fftw_plan_dft(dim, dims, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, plan);
        return plan;
    }

    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;

private:
    PlanCache() = default;
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    std::mutex mutex_;
    std::map<std::tuple<int, std::size_t, int>, fftw_plan> plans_;
};

/// Unnormalized in-place transform: sum_j a_j exp(sign * 2 pi i j.k / n).
inline void fft_in_place(std::vector<std::complex<double>>& data, int dim, std::size_t n, int sign) {
    fftw_plan plan = PlanCache::instance().get(dim, n, sign);
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, buf, buf);
}

} // namespace nldecay::detail
