// Acceptance suite: every release criterion as one pass/fail line.
// Exit code = number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "oracle_eig.hpp"
#include "spectra/config.hpp"
#include "spectra/diagnostics.hpp"
#include "spectra/net.hpp"
#include "spectra/rng.hpp"
#include "spectra/run.hpp"
#include "spectra/theory.hpp"

using namespace spectra;

namespace {

int failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double secs() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void report(int criterion, const std::string& name, bool pass, const std::string& detail,
            double secs) {
    std::printf("[%s] criterion %2d: %s (%s) [%.1fs]\n", pass ? "PASS" : "FAIL", criterion,
                name.c_str(), detail.c_str(), secs);
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

// ---------------------------------------------------------------- criterion 1
void criterion_gap_bound() {
    Timer timer;
    Rng size_rng(20250810);
    std::size_t violations = 0;
    double worst_slack = 1e300;
    const std::size_t trials = 10000;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 2 + size_rng.below(63);
        Rng entry_rng(derive_seed(20250810, rng_stream::trial, t));
        Matrix m(n, n);
        for (double& v : m.data) v = entry_rng.normal();
        const BoundReportEntry e = gap_bound_check(softmax_with_temperature(m, 1.0));
        if (e.slack < -1e-9) ++violations;
        worst_slack = std::min(worst_slack, e.slack);
    }
    bool tight_ok = true;
    for (std::size_t n : {2u, 16u, 64u}) {
        const BoundReportEntry id_case = gap_bound_check(Matrix::identity(n));
        tight_ok = tight_ok && id_case.gap == 0.0;
    }
    for (std::size_t n : {4u, 16u, 64u}) {
        Matrix s(n, n);
        for (std::size_t j = 0; j < n; ++j) s(0, j) = 1.0;
        const BoundReportEntry e = gap_bound_check(s);
        const double root_n = std::sqrt(static_cast<double>(n));
        tight_ok = tight_ok && std::fabs(e.gap - root_n) <= 1e-9 &&
                   std::fabs(e.bound - root_n) <= 1e-9;
    }
    report(1, "Proposition B2 gap bound on 10000 softmaxed Gaussians",
           violations == 0 && tight_ok,
           fmt("%zu violations, worst slack %.3e, tightness %s", violations, worst_slack,
               tight_ok ? "ok" : "BROKEN"),
           timer.secs());
}

// ---------------------------------------------------------------- criterion 2
void criterion_rank2() {
    Timer timer;
    const RankPolicy policy = RankPolicy::relative();
    std::size_t not_found = 0;
    std::size_t dev_failures = 0;
    double worst_dev = 0.0;
    double worst_c = 0.0;
    std::size_t trials = 0;
    for (std::size_t n : {4u, 8u, 16u, 32u}) {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            ++trials;
            const Rank2SearchResult r = rank2_full_rank_search(n, seed, 1e6, policy);
            if (!r.c_found) {
                ++not_found;
                continue;
            }
            worst_c = std::max(worst_c, *r.c_found);
            if (r.rank_at_c != n) ++not_found;
            if (!(r.deviation_at_64c < 1e-6)) ++dev_failures;
            worst_dev = std::max(worst_dev, r.deviation_at_64c);
        }
    }
    report(2, "Appendix I rank-2 to full rank search",
           not_found == 0 && dev_failures == 0,
           fmt("%zu trials: rank-n found with c <= 1e6 in all but %zu (max c %.0f); "
               "identity deviation at 64c < 1e-6 failed in %zu (worst %.3e)",
               trials, not_found, worst_c, dev_failures, worst_dev),
           timer.secs());
}

// ---------------------------------------------------------------- criterion 3
void criterion_nc_rank() {
    Timer timer;
    std::size_t bad = 0;
    double worst_err = 0.0;
    for (std::size_t c = 2; c <= 64; ++c) {
        const NcConstruction nc = nc_rank_construction(c, 5, 1.0);
        if (nc.rank != c - 1 || !(nc.gram_error < 1e-9)) ++bad;
        worst_err = std::max(worst_err, nc.gram_error);
    }
    report(3, "Neural-Collapse rank C-1 construction for C in 2..64", bad == 0,
           fmt("%zu bad classes, worst Gram error %.3e", bad, worst_err), timer.secs());
}

// ---------------------------------------------------------------- criterion 4
void criterion_scaling() {
    Timer timer;
    ScalingExperimentConfig cfg;
    cfg.n = 50;
    cfg.k_values = {1, 2, 3, 4, 5};
    cfg.trials = 20;
    cfg.seed = 555;
    cfg.scales = ScalingExperimentConfig::log_grid(1e-14, 1e3, 4);
    const ScalingResult res = scaling_experiment(cfg, RankPolicy::relative());

    bool small_ok = true;
    bool large_ok = true;
    double worst_small = 0.0;
    double worst_large = 1e300;
    double peak = 0.0;
    for (const ScalingCell& cell : res.cells) {
        peak = std::max(peak, cell.mean_post_rank);
        if (cell.scale == cfg.scales.front()) {
            worst_small = std::max(worst_small, cell.mean_post_rank);
            if (cell.mean_post_rank != 1.0) small_ok = false;
        }
        if (cell.scale == cfg.scales.back()) {
            worst_large = std::min(worst_large, cell.mean_post_rank);
            if (!(cell.mean_post_rank >= 45.0)) large_ok = false;
        }
    }
    report(4, "softmax scaling sweep (n=50, k=1..5, 20 trials)",
           res.pre_rank_violations == 0 && small_ok && large_ok,
           fmt("pre-rank violations %zu; smallest-scale mean rank %.2f (want 1); "
               "largest-scale min mean rank %.2f (want >= 45; sweep peak %.1f)",
               res.pre_rank_violations, worst_small, worst_large, peak),
           timer.secs());
}

// ---------------------------------------------------------------- criterion 5
void criterion_gradient_rank_bound() {
    Timer timer;
    std::size_t bad_cells = 0;
    std::size_t cells = 0;
    for (double t : {1.0, 100.0}) {
        const Dataset blobs = generate_blobs(10, 16, 100, 0.3, 77);
        const NetSpec spec{{16, 16, 16, 16, 10}};
        TrainConfig cfg;
        cfg.temperature = t;
        cfg.learning_rate = 0.05;
        cfg.momentum = 0.9;
        cfg.epochs = 20;
        cfg.batch_size = 64;
        cfg.seed = 5;
        std::vector<std::size_t> record;
        for (std::size_t e = 0; e <= 20; ++e) record.push_back(e);
        const auto [diag, diag_labels] = diagnostic_batch(blobs);
        const TrainTrace trace =
            train(spec, {InitKind::kaiming, 0.1}, cfg, blobs, diag, diag_labels, record);
        for (const GradientRankCell& cell :
             gradient_rank_check(trace, RankPolicy::relative())) {
            ++cells;
            if (!cell.bound_ok) ++bad_cells;
        }
    }
    report(5, "gradient rank bound on 4-layer width-16 runs (T=1 and T=100)", bad_cells == 0,
           fmt("%zu of %zu (layer, epoch) cells violate the bound", bad_cells, cells),
           timer.secs());
}

// ---------------------------------------------------------------- criterion 6
double fd_gradient(Weights weights, const NetSpec& spec, const Matrix& batch,
                   const std::vector<std::size_t>& labels, double t, LossKind loss,
                   std::size_t layer, std::size_t i, std::size_t j, double h) {
    weights[layer](i, j) += h;
    const double up = mean_loss(forward(weights, spec, batch, t).logits, labels, t, loss);
    weights[layer](i, j) -= 2.0 * h;
    const double dn = mean_loss(forward(weights, spec, batch, t).logits, labels, t, loss);
    return (up - dn) / (2.0 * h);
}

void criterion_gradient_correctness() {
    Timer timer;
    std::size_t accepted = 0;
    std::size_t failures_here = 0;
    double worst = 0.0;
    std::uint64_t seed = 1000;
    const double h = 1e-5;
    while (accepted < 50) {
        ++seed;
        Rng rng(seed);
        const std::size_t layers = 2 + rng.below(3);  // 2..4 weight matrices
        std::vector<std::size_t> widths;
        widths.push_back(2 + rng.below(15));
        for (std::size_t l = 1; l < layers; ++l) widths.push_back(2 + rng.below(15));
        widths.push_back(2 + rng.below(9));
        const NetSpec spec{widths};
        const double t = std::vector<double>{0.5, 1.0, 100.0}[rng.below(3)];
        const LossKind loss =
            rng.below(2) == 0 ? LossKind::cross_entropy : LossKind::mse_after_softmax;
        const Weights weights = init_network(spec, {InitKind::kaiming, 0.1}, seed);
        Matrix batch(spec.input_dim(), 5);
        for (double& v : batch.data) v = rng.normal();
        std::vector<std::size_t> labels(5);
        for (auto& y : labels) y = rng.below(spec.class_count());

        // skip configurations with a pre-activation close to the ReLU kink,
        // where the loss is not differentiable and central differences are
        // meaningless
        const ForwardResult probe = forward(weights, spec, batch, t);
        double min_abs_z = 1e300;
        for (std::size_t l = 0; l + 1 < spec.depth(); ++l) {
            for (double z : probe.pre_activations[l].data) {
                min_abs_z = std::min(min_abs_z, std::fabs(z));
            }
        }
        if (min_abs_z < 1e-3) continue;
        ++accepted;

        const Weights grads = backward(weights, spec, batch, labels, t, loss);
        double config_worst = 0.0;
        for (std::size_t l = 0; l < grads.size(); ++l) {
            double layer_max = 0.0;
            for (double g : grads[l].data) layer_max = std::max(layer_max, std::fabs(g));
            const double denom = std::max(layer_max, 1e-12);
            for (std::size_t i = 0; i < grads[l].rows; ++i) {
                for (std::size_t j = 0; j < grads[l].cols; ++j) {
                    const double fd =
                        fd_gradient(weights, spec, batch, labels, t, loss, l, i, j, h);
                    config_worst =
                        std::max(config_worst, std::fabs(fd - grads[l](i, j)) / denom);
                }
            }
        }
        worst = std::max(worst, config_worst);
        if (config_worst > 1e-5) ++failures_here;
    }
    report(6, "finite-difference gradient check on 50 random configurations",
           failures_here == 0,
           fmt("%zu failing configurations, worst relative error %.3e", failures_here, worst),
           timer.secs());
}

// ---------------------------------------------------------------- criterion 7
void criterion_temperature_identity() {
    Timer timer;
    double worst = 0.0;
    Rng rng(31415);
    for (std::size_t trial = 0; trial < 1000; ++trial) {
        Matrix e(10, 1);
        for (double& v : e.data) v = 10.0 * rng.normal();
        for (double t : {0.1, 1.0, 10.0, 1000.0}) {
            Matrix scaled = e;
            for (double& v : scaled.data) v /= t;
            const Matrix a = softmax_with_temperature(e, t);
            const Matrix b = softmax_with_temperature(scaled, 1.0);
            worst = std::max(worst, max_abs_diff(a, b));
        }
    }
    report(7, "temperature identity softmax_T(e) = softmax_1(e/T)", worst <= 1e-15,
           fmt("worst entrywise deviation %.3e over 4000 comparisons", worst), timer.secs());
}

// ---------------------------------------------------------------- criterion 8
RunConfig reference_config(std::uint64_t seed) {
    RunConfig cfg;
    cfg.net.layer_widths = {64, 256, 256, 256, 256, 256, 256, 256, 10};
    cfg.init = {InitKind::kaiming, 0.1};
    cfg.train.temperature = 1.0;
    cfg.train.learning_rate = 0.05;
    cfg.train.momentum = 0.9;
    cfg.train.weight_decay = 0.0;
    cfg.train.epochs = 120;
    cfg.train.batch_size = 128;
    cfg.train.seed = seed;
    cfg.train.loss = LossKind::cross_entropy;
    cfg.dataset.kind = DataSource::Kind::blobs;
    cfg.dataset.classes = 10;
    cfg.dataset.dim = 64;
    cfg.dataset.per_class = 200;
    cfg.dataset.test_per_class = 512;
    cfg.dataset.spread = 0.35;
    cfg.ood_dataset = cfg.dataset;
    cfg.record_epochs = {0, cfg.train.epochs};
    cfg.output_dir = "/tmp/spectra_acceptance";
    return cfg;
}

void criterion_paired_runs() {
    Timer timer;
    int pass_growth = 0, pass_align = 0, pass_sr = 0, pass_kappa = 0;
    std::string detail;
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const RunConfig cfg = reference_config(seed);
        const PairedRunResult pr = run_paired(cfg, R"({"temperature": 100.0})", false);
        pass_growth += pr.variant_growth > pr.baseline_growth;
        pass_align += pr.variant.alignment_avg.back() > pr.baseline.alignment_avg.back();
        pass_sr += pr.variant.sr <= pr.baseline.sr;
        pass_kappa += pr.variant.kappa <= pr.baseline.kappa;
        detail += fmt("seed %llu growth %.0fx/%.0fx align %.2f/%.2f sr %zu/%zu kappa %.2f/%.2f; ",
                      static_cast<unsigned long long>(seed), pr.variant_growth,
                      pr.baseline_growth, pr.variant.alignment_avg.back(),
                      pr.baseline.alignment_avg.back(), pr.variant.sr, pr.baseline.sr,
                      pr.variant.kappa, pr.baseline.kappa);
    }
    report(8, "paired T=100 versus T=1 directional pattern, seeds 1-3",
           pass_growth == 3 && pass_align == 3 && pass_sr == 3 && pass_kappa == 3,
           fmt("growth %d/3, alignment %d/3, SR %d/3, kappa %d/3 | %s", pass_growth,
               pass_align, pass_sr, pass_kappa, detail.c_str()),
           timer.secs());
}

// ---------------------------------------------------------------- criterion 9
void criterion_loss_symmetry() {
    Timer timer;
    const NetSpec spec{{64, 128, 128, 10}};
    const Weights weights = init_network(spec, {InitKind::kaiming, 0.1}, 99);
    Rng rng(2718);
    Matrix batch(64, 256);
    for (double& v : batch.data) v = rng.normal();
    std::vector<std::size_t> labels(256);
    for (auto& y : labels) y = rng.below(10);
    const ForwardResult fr = forward(weights, spec, batch, 1e6);
    const std::vector<double> losses = per_sample_cross_entropy(fr.logits, labels, 1e6);
    const double ln10 = std::log(10.0);
    double worst = 0.0;
    for (double v : losses) worst = std::max(worst, std::fabs(v - ln10));
    report(9, "loss symmetry at T=1e6 (per-sample CE near ln 10)", worst <= 1e-3,
           fmt("worst |loss - ln 10| = %.3e over 256 samples", worst), timer.secs());
}

// --------------------------------------------------------------- criterion 10
void criterion_init_sweep() {
    Timer timer;
    const std::vector<double> sigmas = {1e-4, 1e-3, 1e-2, 1e-1};
    int monotone_norm_seeds = 0;
    int monotone_sr_seeds = 0;
    std::string detail;
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        RunConfig cfg = reference_config(seed);
        cfg.train.epochs = 60;
        cfg.record_epochs = {0, 60};
        const std::vector<InitSweepRow> rows = init_sweep(cfg, sigmas);
        bool norms_increasing = true;
        bool sr_nondecreasing = true;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            norms_increasing =
                norms_increasing && rows[i].initial_logits_norm > rows[i - 1].initial_logits_norm;
            sr_nondecreasing = sr_nondecreasing && rows[i].final_sr >= rows[i - 1].final_sr;
        }
        monotone_norm_seeds += norms_increasing;
        monotone_sr_seeds += sr_nondecreasing;
        detail += fmt("seed %llu SR:", static_cast<unsigned long long>(seed));
        for (const InitSweepRow& row : rows) detail += fmt(" %zu", row.final_sr);
        detail += "; ";
    }
    report(10, "init sweep: norm strictly increasing, final SR non-decreasing",
           monotone_norm_seeds == 3 && monotone_sr_seeds >= 2,
           fmt("norm monotone %d/3, SR non-decreasing %d/3 (need >=2) | %s",
               monotone_norm_seeds, monotone_sr_seeds, detail.c_str()),
           timer.secs());
}

// --------------------------------------------------------------- criterion 11
void criterion_svd_oracle() {
    Timer timer;
    Rng shape_rng(161803);
    double worst = 0.0;
    for (std::size_t trial = 0; trial < 500; ++trial) {
        const std::size_t rows = 2 + shape_rng.below(63);
        const std::size_t cols = 2 + shape_rng.below(63);
        Rng entry_rng(derive_seed(161803, rng_stream::trial, trial));
        Matrix m(rows, cols);
        for (double& v : m.data) v = entry_rng.normal();
        const std::vector<double> s = svd(m).s;
        const Matrix work = rows >= cols ? m : transpose(m);
        const std::vector<double> ref = oracle::singular_values(work);
        for (std::size_t i = 0; i < s.size(); ++i) {
            worst = std::max(worst, std::fabs(s[i] - ref[i]) / ref[0]);
        }
    }
    report(11, "SVD matches the quad-precision Gram eigen oracle", worst <= 1e-9,
           fmt("worst relative deviation %.3e over 500 matrices", worst), timer.secs());
}

// --------------------------------------------------------------- criterion 12
void criterion_metric_fixtures() {
    Timer timer;
    const std::vector<double> kappa_fixture = {0.50, 0.60, 0.70, 0.75, 0.78,
                                               0.801, 0.805, 0.80};
    const double kappa = effective_depth(kappa_fixture, 8);
    const std::vector<double> rho_fixture = {0.10, 0.30, 0.60, 0.45, 0.30};
    const double rho = ood_generalization_loss(rho_fixture);
    report(12, "metric arithmetic fixtures (kappa 75%, rho 50%)",
           kappa == 0.75 && rho == 0.5, fmt("kappa %.17g, rho %.17g", kappa, rho),
           timer.secs());
}

} // namespace

int main() {
    // Cap internal parallelism at two workers unless the caller already chose.
    setenv("SPECTRA_THREADS", "2", 0);
    const Timer total;
    criterion_gap_bound();
    criterion_rank2();
    criterion_nc_rank();
    criterion_scaling();
    criterion_gradient_rank_bound();
    criterion_gradient_correctness();
    criterion_temperature_identity();
    criterion_paired_runs();
    criterion_loss_symmetry();
    criterion_init_sweep();
    criterion_svd_oracle();
    criterion_metric_fixtures();
    std::printf("%d of 12 criteria failed [total %.0fs]\n", failures, total.secs());
    return failures;
}
