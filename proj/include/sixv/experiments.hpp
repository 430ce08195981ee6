#pragma once

// Experiment drivers and run persistence. A run writes its tables into
// the output directory through temporaries (renamed on success, removed
// on failure), then a run record with the canonical config, a manifest
// of output checksums, and summary statistics. Identical (config, seed)
// produce byte-identical tables regardless of the thread count:
// replicas are split into fixed chunks and reduced pairwise.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "config.hpp"
#include "duality.hpp"
#include "dynamics.hpp"
#include "enumerate.hpp"
#include "field.hpp"
#include "gibbs.hpp"
#include "hopf_cole.hpp"
#include "params.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "table.hpp"
#include "version.hpp"
#include "walk.hpp"

namespace sixv {

struct RunRecord {
    std::string config_text;  // canonical
    std::string version;
    double wall_seconds = 0.0;
    std::vector<std::pair<std::string, std::string>> manifest;  // file -> checksum
    std::vector<std::pair<std::string, std::string>> summary;   // key -> value
    bool verified_existing = false;  // true when run() found a completed run and only verified it

    std::string render() const {
        std::ostringstream os;
        os << "# sixv run record v1\n";
        os << "version = " << version << "\n";
        os << "wall_seconds = " << format_double(wall_seconds) << "\n";
        os << "[outputs]\n";
        for (const auto& [f, h] : manifest) os << f << " = " << h << "\n";
        os << "[summary]\n";
        for (const auto& [k, v] : summary) os << k << " = " << v << "\n";
        os << "--- config ---\n";
        os << config_text;
        return os.str();
    }

    static RunRecord parse(const std::string& text) {
        RunRecord r;
        std::istringstream in(text);
        std::string line;
        int mode = 0;
        while (std::getline(in, line)) {
            if (line == "--- config ---") {
                std::ostringstream rest;
                rest << in.rdbuf();
                r.config_text = rest.str();
                break;
            }
            if (line.empty() || line[0] == '#') continue;
            if (line == "[outputs]") { mode = 1; continue; }
            if (line == "[summary]") { mode = 2; continue; }
            const auto eq = line.find(" = ");
            if (eq == std::string::npos) continue;
            const std::string k = line.substr(0, eq), v = line.substr(eq + 3);
            if (mode == 0) {
                if (k == "version") r.version = v;
                else if (k == "wall_seconds") r.wall_seconds = std::stod(v);
            } else if (mode == 1) {
                r.manifest.emplace_back(k, v);
            } else {
                r.summary.emplace_back(k, v);
            }
        }
        return r;
    }
};

namespace detail {

// Replica-parallel accumulation with a deterministic, thread-count
// independent reduction: fixed chunks of replicas, pairwise-summed.
template <typename PerReplica>
std::vector<double> parallel_replicas(std::size_t replicas, int threads, std::size_t values,
                                      PerReplica&& fn) {
    const std::size_t chunk = 256;
    const std::size_t nchunks = (replicas + chunk - 1) / chunk;
    std::vector<std::vector<double>> chunk_sums(nchunks, std::vector<double>(values, 0.0));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= nchunks) return;
            auto& acc = chunk_sums[c];
            const std::size_t lo = c * chunk, hi = std::min(replicas, lo + chunk);
            std::vector<double> vals(values, 0.0);
            for (std::size_t r = lo; r < hi; ++r) {
                fn(r, vals);
                for (std::size_t i = 0; i < values; ++i) acc[i] += vals[i];
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = std::max(1, threads);
    for (int i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    std::vector<double> out(values, 0.0);
    for (std::size_t i = 0; i < values; ++i) {
        std::vector<double> per_chunk(nchunks);
        for (std::size_t c = 0; c < nchunks; ++c) per_chunk[c] = chunk_sums[c][i];
        out[i] = pairwise_sum(per_chunk);
    }
    return out;
}

} // namespace detail

class RunWriter {
public:
    explicit RunWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    void add_table(const std::string& name, const Table& t) {
        const std::string data = t.render();
        const auto tmp = dir_ / (name + ".tmp");
        write_file(tmp, data);
        staged_.emplace_back(name, fnv1a_hex(data));
    }

    void add_summary(const std::string& key, const std::string& value) {
        record_.summary.emplace_back(key, value);
    }
    void add_summary(const std::string& key, double value) {
        record_.summary.emplace_back(key, format_double(value));
    }

    RunRecord commit(const std::string& config_text, double wall_seconds) {
        for (const auto& [name, hash] : staged_) {
            std::filesystem::rename(dir_ / (name + ".tmp"), dir_ / name);
            record_.manifest.emplace_back(name, hash);
        }
        staged_.clear();
        record_.config_text = config_text;
        record_.version = kVersion;
        record_.wall_seconds = wall_seconds;
        write_file(dir_ / "record.txt", record_.render());
        return record_;
    }

    void abort() noexcept {
        for (const auto& [name, hash] : staged_) {
            std::error_code ec;
            std::filesystem::remove(dir_ / (name + ".tmp"), ec);
        }
        staged_.clear();
    }

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::vector<std::pair<std::string, std::string>> staged_;
    RunRecord record_;
};

// ---- individual experiment drivers -----------------------------------------

inline void run_simulate(const ExperimentConfig& c, RunWriter& w) {
    const ModelParams p = c.params();
    const int64_t a = c.window_left, b = c.window_right;
    if (b <= a) throw std::invalid_argument("simulate: set run.window_left/window_right");
    Table t("trajectory", {"t", "x", "eta", "N"});
    const CounterRng rng(c.seed, 0);
    HeightField h = HeightField::from_initial(c.initial(), a, b, rng,
                                              BoundaryPolicy::LeftFiniteCutoff,
                                              RightEdge::AutoExtend);
    for (int64_t s = 0; s <= c.horizon; ++s) {
        for (int64_t y = a; y <= std::min(b, h.right()); ++y)
            t.row().cell(s).cell(y).cell(static_cast<int64_t>(h.occupancy(y))).cell(h.height(y));
        if (s < c.horizon) h.parallel_step(p, rng);
    }
    w.add_table("trajectory.csv", t);
    w.add_summary("steps", static_cast<double>(c.horizon));
}

inline void run_kernel_table(const ExperimentConfig& c, RunWriter& w) {
    const ModelParams p = c.params();
    const std::vector<int64_t> ts = c.t_grid.empty() ? std::vector<int64_t>{1, 2} : c.t_grid;
    Table t1("kernel_k1", {"t", "y", "x", "value", "imag_residual", "nodes", "est_error"});
    Table t2("kernel_k2", {"t", "y1", "y2", "x1", "x2", "value", "imag_residual", "nodes",
                           "est_error"});
    Table tv("semigroup_v", {"t", "j1", "j2", "k1", "k2", "value", "free", "interacting",
                             "imag_residual", "nodes"});
    const int64_t dmax = c.site_grid.empty() ? 8 : c.site_grid.back();
    for (int64_t t : ts) {
        for (int64_t d = 0; d <= dmax; ++d) {
            KernelQuery q{{0}, {d}, t};
            const KernelValue kv = transition_prob(p, q);
            t1.row().cell(t).cell(int64_t{0}).cell(d).cell(kv.value).cell(kv.imag_residual)
                .cell(kv.nodes).cell(kv.est_error);
        }
        SemigroupEvaluator sg(p, t);
        for (int64_t d1 = 0; d1 <= dmax / 2; ++d1) {
            for (int64_t d2 = 0; d2 <= dmax / 2; ++d2) {
                const int64_t x1 = d1, x2 = 1 + d2;
                if (!(x1 < x2)) continue;
                KernelQuery q{{0, 1}, {x1, x2}, t};
                const KernelValue kv = transition_prob(p, q);
                t2.row().cell(t).cell(int64_t{0}).cell(int64_t{1}).cell(x1).cell(x2)
                    .cell(kv.value).cell(kv.imag_residual).cell(kv.nodes).cell(kv.est_error);
                SemigroupQuery sq{0, 1, x1, x2, t, GradientSel::None};
                const SemigroupSplit sp = sg.split(sq);
                tv.row().cell(t).cell(int64_t{0}).cell(int64_t{1}).cell(x1).cell(x2)
                    .cell(sp.total.value).cell(sp.free_part.value).cell(sp.interacting.value)
                    .cell(sp.total.imag_residual).cell(sp.total.nodes);
            }
        }
    }
    w.add_table("kernel_k1.csv", t1);
    w.add_table("kernel_k2.csv", t2);
    w.add_table("semigroup_v.csv", tv);
}

inline void run_duality(const ExperimentConfig& c, RunWriter& w) {
    const ModelParams p = c.params();
    std::vector<uint8_t> occ;
    int64_t left = 0;
    if (c.ic_kind == "explicit") {
        for (char ch : c.ic_occupancy) occ.push_back(static_cast<uint8_t>(ch - '0'));
        left = c.ic_left;
    } else {
        occ = {1, 0, 1, 1, 0, 0};
    }
    std::vector<int64_t> sites = c.site_grid.empty() ? std::vector<int64_t>{1, 3} : c.site_grid;
    const std::vector<int64_t> ts = c.t_grid.empty() ? std::vector<int64_t>{1, 2} : c.t_grid;

    Table t("duality", {"observable", "k", "t", "mode", "lhs", "rhs", "gap", "form_gap", "sigma",
                        "pass"});
    int failures = 0;
    auto push = [&](const char* name, std::size_t k, int64_t tt, const char* mode,
                    const DualityReport& rep, double tol) {
        const double crit = rep.sigma > 0 ? 4.0 * rep.sigma : tol;
        const bool pass = std::fabs(rep.gap) < crit;
        failures += pass ? 0 : 1;
        t.row().cell(std::string(name)).cell(k).cell(tt).cell(std::string(mode)).cell(rep.lhs)
            .cell(rep.rhs).cell(rep.gap).cell(rep.form_gap).cell(rep.sigma).cell(pass);
    };

    for (int64_t tt : ts) {
        // exact mode
        {
            DualityQuery q1{{sites[0]}, tt, DualObservable::H};
            push("H", 1, tt, "exact", duality_check_exact(p, left, occ, q1), 1e-9);
        }
        if (sites.size() >= 2) {
            for (auto obs : {DualObservable::H, DualObservable::Htilde, DualObservable::ZPair,
                             DualObservable::EtaZPair}) {
                DualityQuery q{{sites[0], sites[1]}, tt, obs};
                ExactDualityOptions o;
                o.compute_alt = (obs == DualObservable::H || obs == DualObservable::Htilde);
                const char* name = obs == DualObservable::H        ? "H"
                                   : obs == DualObservable::Htilde ? "Htilde"
                                   : obs == DualObservable::ZPair  ? "ZZ"
                                                                   : "etaZZ";
                push(name, 2, tt, "exact", duality_check_exact(p, left, occ, q, o), 1e-9);
            }
        }
        // MC mode
        if (c.replicas > 0 && sites.size() >= 2) {
            for (auto obs : {DualObservable::H, DualObservable::ZPair}) {
                DualityQuery q{{sites[0], sites[1]}, tt, obs};
                const char* name = obs == DualObservable::H ? "H" : "ZZ";
                push(name, 2, tt, "mc", duality_check_mc(p, q, c.replicas, c.seed), 0.0);
            }
        }
    }
    w.add_table("duality.csv", t);
    w.add_summary("failures", static_cast<double>(failures));
}

inline void run_quadvar(const ExperimentConfig& c, RunWriter& w) {
    const ModelParams p = c.params();
    std::vector<uint8_t> occ;
    int64_t left = 1;
    if (c.ic_kind == "explicit") {
        for (char ch : c.ic_occupancy) occ.push_back(static_cast<uint8_t>(ch - '0'));
        left = c.ic_left;
    } else {
        occ = {1, 0, 1, 1, 0};
    }
    const int64_t b = left + static_cast<int64_t>(occ.size()) - 1;
    DriverEnumerator en(p, left, occ);
    const CounterRng dummy;
    HeightField h0 = HeightField::from_initial(InitialCondition::explicit_occ(left, occ), left, b,
                                               dummy, BoundaryPolicy::Vacuum, RightEdge::Absorb);
    const HopfColeField f0 = HopfColeField::transform(h0, p);
    en.step();
    Table t("quadvar", {"x1", "x2", "empirical", "formula", "discrepancy"});
    double worst = 0.0;
    for (int64_t k1 = left; k1 <= b; ++k1) {
        for (int64_t k2 = k1; k2 <= b; ++k2) {
            double cov = 0.0;
            for (const auto& o : en.outcomes()) {
                auto m_at = [&](int64_t k) {
                    const std::size_t i = static_cast<std::size_t>(k - left);
                    const double z1 =
                        detail::z_of(p, 1, h0.height(k) - o.crossings[i], k);
                    return z1 - f0.convolve(k);
                };
                cov += o.prob * m_at(k1) * m_at(k2);
            }
            const double formula = quadvar_formula(f0, k1, k2);
            worst = std::max(worst, std::fabs(cov - formula));
            t.row().cell(k1).cell(k2).cell(cov).cell(formula).cell(cov - formula);
        }
    }
    w.add_table("quadvar.csv", t);
    w.add_summary("worst_discrepancy", worst);
}

struct StationarityResult {
    bool pass = true;
    double worst_z = 0.0;       // worst |deviation|/sigma over the variance tests
    bool control_failed = true; // the perturbed-h control must fail
    double chi2_p_marginal = 0.0;
    double chi2_p_pairs = 0.0;
};

inline StationarityResult stationarity_suite(const ModelParams& p, double v,
                                             std::size_t replicas, int64_t horizon, int threads,
                                             uint64_t seed, Table* table) {
    const double h = stationary_h(v, p);
    const std::vector<int64_t> t_checks = {horizon / 16, horizon / 4, horizon};
    const int64_t x_max = 64;

    // per replica: crossing counts at column 0 for each checkpoint, and
    // N(t,x) - N(t,0) at the final time for x in {-x_max, x_max}. The
    // flux-injection boundary makes the window law exactly stationary.
    const std::size_t nvals = 2 * t_checks.size() + 4;
    const int64_t a = -x_max - 2;
    auto fn = [&](std::size_t r, std::vector<double>& vals) {
        const CounterRng rng = replica_rng(seed, r);
        HeightField hf = HeightField::from_initial(InitialCondition::bernoulli(v), a, x_max + 1,
                                                   rng, BoundaryPolicy::BernoulliInject,
                                                   RightEdge::Absorb);
        std::size_t ci = 0;
        for (int64_t s = 0; s < horizon; ++s) {
            hf.parallel_step(p, rng);
            if (ci < t_checks.size() && hf.t() == t_checks[ci]) {
                const double n0 = static_cast<double>(-hf.height(0));
                vals[2 * ci] = n0;
                vals[2 * ci + 1] = n0 * n0;
                ++ci;
            }
        }
        const double dplus =
            static_cast<double>(hf.height(x_max) - hf.height(0));
        const double dminus = static_cast<double>(hf.height(0) - hf.height(-x_max));
        vals[2 * t_checks.size() + 0] = dplus;
        vals[2 * t_checks.size() + 1] = dplus * dplus;
        vals[2 * t_checks.size() + 2] = dminus;
        vals[2 * t_checks.size() + 3] = dminus * dminus;
    };
    const auto sums = detail::parallel_replicas(replicas, threads, nvals, fn);
    const double n = static_cast<double>(replicas);

    StationarityResult res;
    auto variance_row = [&](const char* name, double sum, double sumsq, double predicted,
                            bool control) {
        const double mean = sum / n;
        const double var = sumsq / n - mean * mean;
        // standard error of a sample variance ~ var * sqrt(2/(n-1))
        const double se = var * std::sqrt(2.0 / (n - 1.0));
        const double z = (var - predicted) / se;
        const bool pass = std::fabs(z) < 3.0;
        if (!control) {
            res.worst_z = std::max(res.worst_z, std::fabs(z));
            res.pass = res.pass && pass;
        } else {
            res.control_failed = !pass;
        }
        if (table)
            table->row().cell(std::string(name)).cell(var).cell(predicted).cell(z).cell(
                control ? !pass : pass);
    };
    for (std::size_t i = 0; i < t_checks.size(); ++i) {
        const double predicted = static_cast<double>(t_checks[i]) * h * (1.0 - h);
        variance_row(("var_N_t" + std::to_string(t_checks[i])).c_str(), sums[2 * i],
                     sums[2 * i + 1], predicted, false);
    }
    variance_row("var_spatial_plus", sums[2 * t_checks.size()], sums[2 * t_checks.size() + 1],
                 v * (1.0 - v) * static_cast<double>(x_max), false);
    variance_row("var_spatial_minus", sums[2 * t_checks.size() + 2],
                 sums[2 * t_checks.size() + 3], v * (1.0 - v) * static_cast<double>(x_max), false);
    // power check: the same temporal test against a mis-specified flux
    {
        const double hbad = h + 0.05;
        const std::size_t i = t_checks.size() - 1;
        const double predicted = static_cast<double>(t_checks[i]) * hbad * (1.0 - hbad);
        variance_row("control_perturbed_h", sums[2 * i], sums[2 * i + 1], predicted, true);
    }
    res.pass = res.pass && res.control_failed;
    return res;
}

inline void run_stationarity(const ExperimentConfig& c, RunWriter& w) {
    const ModelParams p = c.params();
    const std::size_t replicas = c.replicas ? c.replicas : 100000;
    const int64_t horizon = c.horizon ? c.horizon : 128;
    Table t("stationarity", {"test", "observed", "predicted", "z", "pass"});
    const StationarityResult res =
        stationarity_suite(p, c.v, replicas, horizon, c.threads, c.seed, &t);
    // independence along down-right paths, via the Gibbs box sampler
    {
        std::vector<uint8_t> seq;
        for (int rep = 0; rep < 12; ++rep) {
            const GibbsSample s = sample_gibbs(p, c.v, 96, 96, replica_rng(c.seed, 7000 + rep));
            const auto row = row_vertical_in(s, 48);
            seq.insert(seq.end(), row.begin(), row.end());
        }
        double n1 = 0;
        for (auto b : seq) n1 += b;
        const double n = static_cast<double>(seq.size());
        const double stat = chi2_statistic({n1, n - n1}, {n * c.v, n * (1.0 - c.v)});
        const double pval = chi2_pvalue(stat, 1);
        t.row().cell(std::string("chi2_row_marginal")).cell(stat).cell(0.0).cell(pval).cell(
            pval > 0.001);
    }
    w.add_table("stationarity.csv", t);
    w.add_summary("pass", res.pass ? "true" : "false");
    w.add_summary("worst_z", res.worst_z);
    w.add_summary("control_failed", res.control_failed ? "true" : "false");
}

inline void run_self_averaging(const ExperimentConfig& c, RunWriter& w) {
    const std::vector<double> grid =
        c.eps_grid.empty() ? std::vector<double>{0.25, 0.1, 0.04} : c.eps_grid;
    const std::size_t replicas = c.replicas ? c.replicas : 10000;
    Table t("selfavg", {"eps", "horizon", "replicas", "l2_estimate", "std_error"});
    std::vector<double> estimates;
    for (double e : grid) {
        const ModelParams p = ModelParams::weak(c.b1, e, c.rho);
        const int64_t horizon =
            c.horizon ? c.horizon : static_cast<int64_t>(0.5 / (e * e));
        const SelfAvgStatistic s = self_averaging_stat(
            p, InitialCondition::bernoulli(c.rho), horizon, c.x_star, replicas, c.seed);
        estimates.push_back(s.l2_estimate);
        t.row().cell(e).cell(s.horizon).cell(s.replicas).cell(s.l2_estimate).cell(s.std_error);
    }
    w.add_table("selfavg.csv", t);
    bool decreasing = true;
    for (std::size_t i = 1; i < estimates.size(); ++i)
        decreasing = decreasing && estimates[i] < estimates[i - 1];
    w.add_summary("strictly_decreasing", decreasing ? "true" : "false");
    if (grid.size() >= 2) {
        const double ratio = estimates.front() / estimates.back();
        const double target = std::pow(grid.front() / grid.back(), 0.25);
        w.add_summary("end_to_end_ratio", ratio);
        w.add_summary("quarter_power_target", target);
    }
}

inline void run_scaling_sweep(const ExperimentConfig& c, RunWriter& w) {
    if (!c.eps.has_value() || !(*c.eps > 0.0))
        throw std::invalid_argument("scaling-sweep: needs weak-asymmetry model.eps");
    const ModelParams p = c.params();
    const double eps = *c.eps;
    const double se = std::sqrt(eps);
    // macroscopic grid: t in {0, 0.1, ..}, x over site_grid (in eps^-1 units)
    std::vector<int64_t> xs = c.site_grid;
    if (xs.empty())
        for (int64_t i = -10; i <= 10; ++i) xs.push_back(i);
    const int64_t s_max = c.horizon ? c.horizon : static_cast<int64_t>(0.25 / (eps * eps));
    const int64_t x_span = static_cast<int64_t>(std::llabs(xs.back())) +
                           static_cast<int64_t>(std::ceil(1.0 / eps));
    const int64_t drift = static_cast<int64_t>(std::ceil(p.mu * static_cast<double>(s_max)));
    const bool stationary = c.ic_kind == "bernoulli";
    const int64_t a = stationary ? -x_span - 2
                                 : window_truncation(s_max, -x_span, 1e-9, p, 0.0);
    const CounterRng rng(c.seed, 0);
    HeightField h = HeightField::from_initial(c.initial(), a, x_span + drift + 2, rng,
                                              stationary ? BoundaryPolicy::BernoulliInject
                                                         : BoundaryPolicy::LeftFiniteCutoff,
                                              RightEdge::Absorb);
    Table t("rescaled_height", {"t_macro", "x_macro", "s", "k", "h_eps"});
    const double shift = c.step_shift ? std::log(p.rho * (1.0 - p.rho) / se) : 0.0;
    const std::vector<int64_t> snapshots = {0, s_max / 4, s_max / 2, s_max};
    std::size_t si = 0;
    for (int64_t s = 0; s <= s_max; ++s) {
        if (si < snapshots.size() && s == snapshots[si]) {
            for (int64_t xi : xs) {
                const int64_t k = xi + static_cast<int64_t>(std::floor(
                                           p.mu * static_cast<double>(s)));
                const double val = se * (static_cast<double>(h.height(k)) -
                                         p.rho * static_cast<double>(k)) -
                                   static_cast<double>(s) * std::log(p.lambda) - shift;
                t.row().cell(eps * eps * static_cast<double>(s))
                    .cell(eps * static_cast<double>(xi)).cell(s).cell(k).cell(val);
            }
            ++si;
        }
        if (s < s_max) h.parallel_step(p, rng);
    }
    w.add_table("rescaled_height.csv", t);

    // Brownian-increment KS diagnostic on the initial profile; blocks of
    // 4/eps sites keep the standardized value lattice fine
    if (c.ic_kind == "bernoulli") {
        const int64_t block = static_cast<int64_t>(std::llround(4.0 / eps));
        const int64_t nblocks = 200;
        const CounterRng rng2(c.seed, 1);
        HeightField h0 = HeightField::from_initial(c.initial(), -nblocks * block / 2,
                                                   nblocks * block / 2, rng2,
                                                   BoundaryPolicy::LeftFiniteCutoff,
                                                   RightEdge::Absorb);
        const double sd = std::sqrt(p.rho * (1.0 - p.rho) * static_cast<double>(block));
        std::vector<double> incs;
        for (int64_t i = 0; i < nblocks; ++i) {
            const int64_t x0 = h0.left() + i * block, x1 = x0 + block;
            incs.push_back((static_cast<double>(h0.height(x1) - h0.height(x0)) -
                            p.rho * static_cast<double>(block)) / sd);
        }
        w.add_summary("ks_p_value", ks_test_standard_normal(incs));
    }
}

inline void run_gibbs_sample(const ExperimentConfig& c, RunWriter& w) {
    const ModelParams p = c.params();
    const GibbsSample s =
        sample_gibbs(p, c.v, c.box_width, c.box_height, CounterRng(c.seed, 0));
    Table t("gibbs_vertices", {"x", "y", "v_in", "h_in", "v_out", "h_out"});
    for (int64_t y = 0; y < s.height; ++y)
        for (int64_t x = 0; x < s.width; ++x)
            t.row().cell(x).cell(y).cell(static_cast<int64_t>(s.v_in[s.idx(x, y)]))
                .cell(static_cast<int64_t>(s.h_in[s.idx(x, y)]))
                .cell(static_cast<int64_t>(s.v_out[s.idx(x, y)]))
                .cell(static_cast<int64_t>(s.h_out[s.idx(x, y)]));
    w.add_table("gibbs_vertices.csv", t);

    Table path("gibbs_path", {"index", "vertical", "occupied"});
    const auto stairs = staircase_incoming(s);
    for (std::size_t i = 0; i < stairs.size(); ++i)
        path.row().cell(i).cell(static_cast<int64_t>(stairs[i].vertical))
            .cell(static_cast<int64_t>(stairs[i].occupied));
    w.add_table("gibbs_path.csv", path);
    w.add_summary("empirical_v", s.empirical_v());
    w.add_summary("empirical_h", s.empirical_h());
    w.add_summary("target_v", s.target_v);
    w.add_summary("target_h", s.target_h);
}

inline void run_empirical_field(const ExperimentConfig& c, RunWriter& w) {
    if (!c.eps.has_value() || !(*c.eps > 0.0))
        throw std::invalid_argument("empirical-field: needs weak-asymmetry model.eps");
    const ModelParams p = c.params();
    const std::size_t replicas = c.replicas ? c.replicas : 100;
    const double ell = 1.0;
    const auto family = default_test_family(ell);
    const std::vector<double> deltas = {1.0, 0.5, 0.25, 0.125};
    Table t("empirical_field", {"replica", "pairing_bump0", "seminorm", "best_delta"});
    RunningStats pairing;
    for (std::size_t r = 0; r < replicas; ++r) {
        const EmpiricalField f =
            sample_empirical_field(p, c.v, 1.6 * ell, 1.2 * ell, replica_rng(c.seed, r));
        const double pr = empirical_pairing(f, family.front());
        const SeminormResult sn = cminus1_seminorm(f, family, deltas);
        pairing.add(pr);
        t.row().cell(r).cell(pr).cell(sn.value).cell(sn.best_delta);
    }
    w.add_table("empirical_field.csv", t);
    w.add_summary("pairing_mean", pairing.mean());
    w.add_summary("pairing_se", pairing.stderr_mean());

    // seminorm of the difference of two independent samples, per eps
    if (!c.eps_grid.empty()) {
        Table td("field_difference", {"eps", "replica_pairs", "mean_diff_seminorm", "se"});
        std::vector<double> means;
        for (double e : c.eps_grid) {
            const ModelParams pe = ModelParams::weak(c.b1, e, c.rho);
            RunningStats sn;
            for (std::size_t r = 0; r < replicas; ++r) {
                const EmpiricalField fa = sample_empirical_field(pe, c.v, 1.6 * ell, 1.2 * ell,
                                                                 replica_rng(c.seed, 2 * r));
                const EmpiricalField fb = sample_empirical_field(pe, c.v, 1.6 * ell, 1.2 * ell,
                                                                 replica_rng(c.seed, 2 * r + 1));
                sn.add(cminus1_seminorm_difference(fa, fb, family, deltas).value);
            }
            means.push_back(sn.mean());
            td.row().cell(e).cell(replicas).cell(sn.mean()).cell(sn.stderr_mean());
        }
        w.add_table("field_difference.csv", td);
        bool decreasing = true;
        for (std::size_t i = 1; i < means.size(); ++i)
            decreasing = decreasing && means[i] < means[i - 1];
        w.add_summary("difference_seminorm_decreasing", decreasing ? "true" : "false");
    }
}

// ---- orchestration ----------------------------------------------------------

inline RunRecord execute(const ExperimentConfig& c, RunWriter& w) {
    const auto start = std::chrono::steady_clock::now();
    try {
        if (c.kind == "simulate") run_simulate(c, w);
        else if (c.kind == "kernel-table") run_kernel_table(c, w);
        else if (c.kind == "duality") run_duality(c, w);
        else if (c.kind == "quadvar") run_quadvar(c, w);
        else if (c.kind == "stationarity") run_stationarity(c, w);
        else if (c.kind == "self-averaging") run_self_averaging(c, w);
        else if (c.kind == "scaling-sweep") run_scaling_sweep(c, w);
        else if (c.kind == "gibbs-sample") run_gibbs_sample(c, w);
        else if (c.kind == "empirical-field") run_empirical_field(c, w);
        else throw std::invalid_argument("unknown experiment kind '" + c.kind + "'");
    } catch (...) {
        w.abort();
        throw;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return w.commit(c.serialize(), secs);
}

// Run into the configured output directory. If a completed record with
// the same canonical config already exists and all outputs match their
// checksums, the run is a no-op verification pass.
inline RunRecord run(const ExperimentConfig& c) {
    c.validate();
    if (c.out_dir.empty()) throw std::invalid_argument("run: config has no run.out directory");
    const std::filesystem::path dir(c.out_dir);
    const auto record_path = dir / "record.txt";
    if (std::filesystem::exists(record_path)) {
        RunRecord old = RunRecord::parse(read_file(record_path));
        if (old.config_text == c.serialize()) {
            bool ok = true;
            for (const auto& [name, hash] : old.manifest) {
                const auto f = dir / name;
                ok = ok && std::filesystem::exists(f) && fnv1a_hex(read_file(f)) == hash;
            }
            if (ok) {
                old.verified_existing = true;
                return old;
            }
        }
    }
    RunWriter w(dir);
    return execute(c, w);
}

// Re-run a record's config into a scratch directory and compare
// checksums against the original manifest.
inline bool replay(const std::filesystem::path& record_path) {
    const RunRecord rec = RunRecord::parse(read_file(record_path));
    ExperimentConfig c = ExperimentConfig::parse(rec.config_text);
    const auto scratch =
        std::filesystem::temp_directory_path() /
        ("sixv-replay-" + fnv1a_hex(rec.config_text + std::to_string(::getpid())));
    RunWriter w(scratch);
    const RunRecord redo = execute(c, w);
    bool ok = redo.manifest.size() == rec.manifest.size();
    for (std::size_t i = 0; ok && i < redo.manifest.size(); ++i)
        ok = redo.manifest[i] == rec.manifest[i];
    std::filesystem::remove_all(scratch);
    return ok;
}

} // namespace sixv
