#pragma once

// Replica-parallel execution. Each replica writes only its own slot, so the
// collected vector is independent of the thread count and the schedule; all
// downstream statistics reduce it in index order.

#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <omp.h>

#include "she/errors.hpp"

namespace she {

/// Worker threads for ensembles; 0 means "auto" (OpenMP default).
struct Parallelism {
    int threads = 0;

    int resolved() const { return threads > 0 ? threads : omp_get_max_threads(); }
};

template <class R>
struct ReplicaOutcomes {
    std::vector<std::optional<R>> values;  ///< nullopt for aborted replicas.
    std::vector<std::string> abort_reasons;

    std::int64_t aborted() const { return static_cast<std::int64_t>(abort_reasons.size()); }
    std::int64_t completed() const { return static_cast<std::int64_t>(values.size()) - aborted(); }
    /// Fraction of replicas lost to non-finite values.
    double abort_fraction() const {
        return values.empty() ? 0.0 : static_cast<double>(aborted()) / static_cast<double>(values.size());
    }

    std::vector<R> completed_values() const {
        std::vector<R> out;
        out.reserve(values.size());
        for (const auto& v : values) {
            if (v) {
                out.push_back(*v);
            }
        }
        return out;
    }
};

namespace detail {

template <class R>
void finish(ReplicaOutcomes<R>& out, std::vector<std::string>& reasons, std::vector<std::exception_ptr>& errors) {
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    for (auto& r : reasons) {
        if (!r.empty()) {
            out.abort_reasons.push_back(std::move(r));
        }
    }
}

}  // namespace detail

/// Runs fn(replica) for replica = first .. first + n - 1 across OpenMP threads.
/// ReplicaAbort marks a replica as aborted; any other exception is rethrown
/// (lowest replica first) after the parallel region.
template <class Fn>
auto run_replicas(std::int64_t n, Fn&& fn, Parallelism par = {}, std::uint64_t first = 0)
    -> ReplicaOutcomes<decltype(fn(std::uint64_t{}))> {
    using R = decltype(fn(std::uint64_t{}));
    ReplicaOutcomes<R> out;
    out.values.resize(static_cast<std::size_t>(n));
    std::vector<std::string> reasons(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1) num_threads(par.resolved())
    for (std::int64_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            out.values[k] = fn(first + static_cast<std::uint64_t>(i));
        } catch (const ReplicaAbort& a) {
            reasons[k] = "replica " + std::to_string(first + k) + ": " + a.what();
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    detail::finish(out, reasons, errors);
    return out;
}

/// Serial reference for run_replicas.
template <class Fn>
auto run_replicas_serial(std::int64_t n, Fn&& fn, std::uint64_t first = 0)
    -> ReplicaOutcomes<decltype(fn(std::uint64_t{}))> {
    using R = decltype(fn(std::uint64_t{}));
    ReplicaOutcomes<R> out;
    out.values.resize(static_cast<std::size_t>(n));
    std::vector<std::string> reasons(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            out.values[k] = fn(first + static_cast<std::uint64_t>(i));
        } catch (const ReplicaAbort& a) {
            reasons[k] = "replica " + std::to_string(first + k) + ": " + a.what();
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    detail::finish(out, reasons, errors);
    return out;
}

}  // namespace she
