// The physics oracle contract: Airfoil x FlowConditions -> lift coefficient
// or a tagged non-convergence reason.

#pragma once

#include <atomic>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "pgfoil/airfoil.hpp"
#include "pgfoil/errors.hpp"

namespace pgfoil {

struct FlowConditions {
    double alpha_deg = 5.0;
    double reynolds = 3.0e6;
    int max_iterations = 100;
    bool viscous = true;

    void validate() const {
        if (max_iterations < 1) throw DomainError("flow conditions: max_iterations must be >= 1");
        if (viscous && !(reynolds > 0.0))
            throw DomainError("flow conditions: reynolds must be > 0 for viscous analysis");
    }
};

enum class FailReason {
    None,
    DegeneratePanel,
    SelfIntersecting,
    Singular,
    NonFinite,
    Solver,   // the external solver reported non-convergence
    Io,       // executable missing / workdir unusable
    Timeout,
    Parse,
};

inline const char* fail_reason_name(FailReason r) {
    switch (r) {
        case FailReason::None: return "none";
        case FailReason::DegeneratePanel: return "degenerate-panel";
        case FailReason::SelfIntersecting: return "self-intersecting";
        case FailReason::Singular: return "singular";
        case FailReason::NonFinite: return "non-finite";
        case FailReason::Solver: return "solver";
        case FailReason::Io: return "io";
        case FailReason::Timeout: return "timeout";
        case FailReason::Parse: return "parse";
    }
    return "?";
}

/// True when the failure is environmental (reported, never treated as physics).
inline bool environment_failure(FailReason r) {
    return r == FailReason::Io || r == FailReason::Timeout || r == FailReason::Parse;
}

struct OracleResult {
    bool ok = false;
    double cl = 0.0;
    FailReason reason = FailReason::None;

    static OracleResult converged(double cl) {
        if (!std::isfinite(cl)) return not_converged(FailReason::NonFinite);
        return {true, cl, FailReason::None};
    }
    static OracleResult not_converged(FailReason r) { return {false, 0.0, r}; }

    bool converged_ok() const { return ok; }
};

/// Implementations must behave as pure functions per call and be safe for
/// concurrent use.
class OracleContract {
public:
    virtual ~OracleContract() = default;
    virtual OracleResult evaluate(const Airfoil& shape, const FlowConditions& cond) const = 0;
    virtual std::string name() const = 0;
};

/// Order-preserving parallel evaluation: result i always corresponds to
/// shape i, whatever the completion order.
inline std::vector<OracleResult> batch_evaluate(const std::vector<Airfoil>& shapes,
                                                const FlowConditions& cond,
                                                const OracleContract& oracle, int parallelism) {
    if (parallelism < 1) throw DomainError("batch_evaluate: parallelism must be >= 1");
    std::vector<OracleResult> results(shapes.size());
    if (shapes.empty()) return results;

    if (parallelism == 1 || shapes.size() == 1) {
        for (std::size_t i = 0; i < shapes.size(); ++i) results[i] = oracle.evaluate(shapes[i], cond);
        return results;
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= shapes.size()) return;
            results[i] = oracle.evaluate(shapes[i], cond);
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(parallelism, static_cast<int>(shapes.size()));
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return results;
}

/// Thread-safe call-counting wrapper (training cost accounting).
class CountingOracle : public OracleContract {
public:
    explicit CountingOracle(const OracleContract& inner) : inner_(inner) {}

    OracleResult evaluate(const Airfoil& shape, const FlowConditions& cond) const override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        return inner_.evaluate(shape, cond);
    }
    std::string name() const override { return inner_.name(); }

    long calls() const { return calls_.load(); }

private:
    const OracleContract& inner_;
    mutable std::atomic<long> calls_{0};
};

}  // namespace pgfoil
