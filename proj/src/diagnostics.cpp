#include "spectra/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "spectra/errors.hpp"
#include "spectra/rng.hpp"
#include "spectra/svd.hpp"

namespace spectra {

namespace {

void require_snapshots(const TrainTrace& trace) {
    if (trace.snapshots.empty()) throw DimensionError("trace has no recorded epochs");
}

} // namespace

std::vector<double> logits_norm_curve(const TrainTrace& trace) {
    require_snapshots(trace);
    std::vector<double> out;
    out.reserve(trace.snapshots.size());
    for (const EpochSnapshot& snap : trace.snapshots) {
        double sum = 0.0;
        for (double v : snap.logits.data) sum += v * v;
        out.push_back(std::sqrt(sum));
    }
    return out;
}

RankCurves rank_curves(const TrainTrace& trace, const RankPolicy& policy) {
    require_snapshots(trace);
    RankCurves out;
    for (const EpochSnapshot& snap : trace.snapshots) {
        out.epochs.push_back(snap.epoch);
        out.pre.push_back(numerical_rank(snap.logits, policy));
        out.post.push_back(
            numerical_rank(softmax_with_temperature(snap.logits, trace.config.temperature),
                           policy));
    }
    return out;
}

AlignmentReport alignment_report(const TrainTrace& trace, std::size_t k) {
    require_snapshots(trace);
    const std::size_t min_width =
        *std::min_element(trace.spec.layer_widths.begin(), trace.spec.layer_widths.end());
    const std::size_t batch = trace.diagnostic_batch.cols;
    if (k == 0 || k > std::min(min_width, batch)) {
        throw DimensionError("alignment_report: k=" + std::to_string(k) +
                             " exceeds the smallest layer width");
    }
    AlignmentReport report;
    report.k = k;
    for (const EpochSnapshot& snap : trace.snapshots) {
        AlignmentEpoch ae;
        ae.epoch = snap.epoch;
        double sum = 0.0;
        for (std::size_t l = 0; l < trace.spec.depth(); ++l) {
            // right singular vectors of W^l against left singular vectors of
            // the layer's input activations A^{l-1}
            const auto [w_left, w_right] = top_k_subspaces(snap.weights[l], k);
            const auto [a_left, a_right] = top_k_subspaces(snap.activations[l], k);
            (void)w_left;
            (void)a_right;
            const Matrix grid = multiply(transpose(w_right), a_left);
            AlignmentLayer al;
            al.layer = l + 1;
            al.grid = Matrix(k, k);
            for (std::size_t i = 0; i < k; ++i) {
                for (std::size_t j = 0; j < k; ++j) {
                    const double c = std::fabs(grid(i, j));
                    al.grid(i, j) = c;
                    al.max_cosine = std::max(al.max_cosine, c);
                }
            }
            sum += al.max_cosine;
            ae.layers.push_back(std::move(al));
        }
        ae.network_average = sum / static_cast<double>(trace.spec.depth());
        report.epochs.push_back(std::move(ae));
    }
    return report;
}

std::vector<GradientRankCell> gradient_rank_check(const TrainTrace& trace,
                                                  const RankPolicy& policy) {
    require_snapshots(trace);
    std::vector<GradientRankCell> cells;
    for (const EpochSnapshot& snap : trace.snapshots) {
        for (std::size_t l = 0; l < trace.spec.depth(); ++l) {
            const Matrix& grad = snap.gradients[l];
            const Matrix& act = snap.activations[l];
            const std::vector<double> sg = svd(grad).s;
            const std::vector<double> sa = svd(act).s;
            GradientRankCell cell;
            cell.layer = l + 1;
            cell.epoch = snap.epoch;
            cell.grad_rank = rank_from_singular_values(sg, grad.rows, grad.cols, policy);
            cell.act_rank = rank_from_singular_values(sa, act.rows, act.cols, policy);
            const double top = std::max(sg.empty() ? 0.0 : sg[0], sa.empty() ? 0.0 : sa[0]);
            const RankPolicy shared = RankPolicy::absolute(std::max(1e-300, 1e-10 * top));
            const std::size_t g_exact =
                rank_from_singular_values(sg, grad.rows, grad.cols, shared);
            const std::size_t a_exact = rank_from_singular_values(sa, act.rows, act.cols, shared);
            cell.bound_ok = g_exact <= a_exact;
            cells.push_back(cell);
        }
    }
    return cells;
}

double effective_depth(const std::vector<double>& probe_accs, std::size_t total_layers) {
    if (probe_accs.empty()) throw DimensionError("effective_depth: empty accuracy list");
    if (probe_accs.size() != total_layers) {
        throw DimensionError("effective_depth: expected one accuracy per layer");
    }
    const double target = 0.99 * probe_accs.back();
    for (std::size_t i = 0; i < probe_accs.size(); ++i) {
        if (probe_accs[i] >= target) {
            return static_cast<double>(i + 1) / static_cast<double>(total_layers);
        }
    }
    return 1.0;
}

double ood_generalization_loss(const std::vector<double>& ood_accs) {
    if (ood_accs.empty()) throw DimensionError("ood_generalization_loss: empty accuracy list");
    const double best = *std::max_element(ood_accs.begin(), ood_accs.end());
    if (best <= 0.0) {
        throw ValidationError("ood_generalization_loss: all accuracies are zero");
    }
    return (best - ood_accs.back()) / best;
}

std::size_t solutions_rank(const Matrix& logits, const RankPolicy& policy) {
    return numerical_rank(logits, policy);
}

double orthodev(const Matrix& penultimate_id, const std::vector<std::size_t>& labels,
                const Matrix& penultimate_ood) {
    require_nonempty(penultimate_id, "orthodev id representations");
    require_nonempty(penultimate_ood, "orthodev ood representations");
    if (penultimate_id.rows != penultimate_ood.rows) {
        throw DimensionError("orthodev: representation dims differ");
    }
    if (labels.size() != penultimate_id.cols) {
        throw DimensionError("orthodev: label count != id columns");
    }
    const std::size_t dim = penultimate_id.rows;
    std::vector<double> global(dim, 0.0);
    for (std::size_t j = 0; j < penultimate_ood.cols; ++j) {
        for (std::size_t i = 0; i < dim; ++i) global[i] += penultimate_ood(i, j);
    }
    double gnorm = 0.0;
    for (double& v : global) {
        v /= static_cast<double>(penultimate_ood.cols);
    }
    for (double v : global) gnorm += v * v;
    gnorm = std::sqrt(gnorm);
    if (gnorm == 0.0) {
        throw DegenerateRepresentationError("orthodev: zero-norm OOD global mean");
    }

    std::size_t classes = 0;
    for (std::size_t y : labels) classes = std::max(classes, y + 1);
    double total = 0.0;
    std::size_t counted = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        std::vector<double> mu(dim, 0.0);
        std::size_t count = 0;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j] != c) continue;
            ++count;
            for (std::size_t i = 0; i < dim; ++i) mu[i] += penultimate_id(i, j);
        }
        if (count == 0) continue;
        double mnorm = 0.0, dot = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            mu[i] /= static_cast<double>(count);
            mnorm += mu[i] * mu[i];
            dot += mu[i] * global[i];
        }
        mnorm = std::sqrt(mnorm);
        if (mnorm == 0.0) {
            throw DegenerateRepresentationError("orthodev: zero-norm class mean");
        }
        total += std::fabs(dot / (mnorm * gnorm));
        ++counted;
    }
    if (counted == 0) throw DegenerateRepresentationError("orthodev: no labeled classes");
    return total / static_cast<double>(counted);
}

namespace {

// Hidden activations for a dataset at the trace's final weights, then the
// logits and softmax stages.
struct LayerFeatures {
    std::vector<Matrix> activations;  // A^1..A^{L-1}
    Matrix logits;
    Matrix probs;
};

LayerFeatures layer_features(const TrainTrace& trace, const Dataset& ds) {
    const ForwardResult fr =
        forward(trace.final().weights, trace.spec, ds.features, trace.config.temperature);
    LayerFeatures lf;
    lf.activations.assign(fr.activations.begin() + 1, fr.activations.end());
    lf.logits = fr.logits;
    lf.probs = fr.probs;
    return lf;
}

} // namespace

MetricsReport metrics_report(const TrainTrace& trace, const Dataset& id_set,
                             const Dataset& ood_set, const RankPolicy& policy,
                             std::uint64_t seed) {
    require_snapshots(trace);
    id_set.validate();
    ood_set.validate();
    MetricsReport report;

    report.logits_norm = logits_norm_curve(trace);
    const RankCurves rc = rank_curves(trace, policy);
    report.curve_epochs = rc.epochs;
    report.pre_rank = rc.pre;
    report.post_rank = rc.post;
    const std::size_t min_width =
        *std::min_element(trace.spec.layer_widths.begin(), trace.spec.layer_widths.end());
    const std::size_t k = std::min<std::size_t>(15, std::min(min_width, trace.diagnostic_batch.cols));
    const AlignmentReport ar = alignment_report(trace, k);
    for (const AlignmentEpoch& ae : ar.epochs) report.alignment_avg.push_back(ae.network_average);

    const std::size_t depth = trace.spec.depth();
    const LayerFeatures id_feats = layer_features(trace, id_set);
    const LayerFeatures ood_feats = layer_features(trace, ood_set);

    std::vector<double> test_accs, ood_accs;
    for (std::size_t split_idx = 0; split_idx < 2; ++split_idx) {
        const bool is_ood = split_idx == 1;
        const LayerFeatures& feats = is_ood ? ood_feats : id_feats;
        const Dataset& ds = is_ood ? ood_set : id_set;
        const std::uint64_t probe_seed = derive_seed(seed, rng_stream::probe, split_idx);
        std::vector<double>& accs = is_ood ? ood_accs : test_accs;
        for (std::size_t l = 0; l < depth - 1; ++l) {
            const double acc = train_probe_accuracy(feats.activations[l], ds.labels, probe_seed);
            accs.push_back(acc);
            report.probes.push_back({l + 1, ds.split, "activation", acc});
        }
        const double logit_acc = train_probe_accuracy(feats.logits, ds.labels, probe_seed);
        accs.push_back(logit_acc);
        report.probes.push_back({depth, ds.split, "logits", logit_acc});
        const double soft_acc = train_probe_accuracy(feats.probs, ds.labels, probe_seed);
        report.probes.push_back({depth, ds.split, "softmax", soft_acc});
    }

    report.kappa = effective_depth(test_accs, depth);
    report.rho = ood_generalization_loss(ood_accs);
    report.sr = solutions_rank(trace.final().logits, policy);
    const Matrix& id_penult =
        depth >= 2 ? id_feats.activations[depth - 2] : id_set.features;
    const Matrix& ood_penult =
        depth >= 2 ? ood_feats.activations[depth - 2] : ood_set.features;
    report.orthodev = orthodev(id_penult, id_set.labels, ood_penult);
    return report;
}

namespace {

nlohmann::json curve_json(const std::vector<std::size_t>& epochs, const std::vector<double>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < v.size(); ++i) {
        arr.push_back({{"epoch", epochs[i]}, {"value", v[i]}});
    }
    return arr;
}

nlohmann::json curve_json(const std::vector<std::size_t>& epochs,
                          const std::vector<std::size_t>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < v.size(); ++i) {
        arr.push_back({{"epoch", epochs[i]}, {"value", v[i]}});
    }
    return arr;
}

} // namespace

std::string metrics_to_json(const MetricsReport& report) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["kappa"] = report.kappa;
    j["rho"] = report.rho;
    j["sr"] = report.sr;
    j["orthodev"] = report.orthodev;
    j["curves"]["logits_norm"] = curve_json(report.curve_epochs, report.logits_norm);
    j["curves"]["pre_rank"] = curve_json(report.curve_epochs, report.pre_rank);
    j["curves"]["post_rank"] = curve_json(report.curve_epochs, report.post_rank);
    j["curves"]["alignment_avg"] = curve_json(report.curve_epochs, report.alignment_avg);
    nlohmann::json probes = nlohmann::json::array();
    for (const ProbeRecord& p : report.probes) {
        probes.push_back({{"layer", p.layer},
                          {"split", split_name(p.split)},
                          {"stage", p.stage},
                          {"accuracy", p.accuracy}});
    }
    j["probes"] = probes;
    return j.dump(2);
}

MetricsReport metrics_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1) {
        throw ValidationError("metrics json: unsupported schema_version");
    }
    MetricsReport report;
    report.kappa = j.at("kappa").get<double>();
    report.rho = j.at("rho").get<double>();
    report.sr = j.at("sr").get<std::size_t>();
    report.orthodev = j.at("orthodev").get<double>();
    for (const auto& e : j.at("curves").at("logits_norm")) {
        report.curve_epochs.push_back(e.at("epoch").get<std::size_t>());
        report.logits_norm.push_back(e.at("value").get<double>());
    }
    for (const auto& e : j.at("curves").at("pre_rank")) {
        report.pre_rank.push_back(e.at("value").get<std::size_t>());
    }
    for (const auto& e : j.at("curves").at("post_rank")) {
        report.post_rank.push_back(e.at("value").get<std::size_t>());
    }
    for (const auto& e : j.at("curves").at("alignment_avg")) {
        report.alignment_avg.push_back(e.at("value").get<double>());
    }
    for (const auto& p : j.at("probes")) {
        report.probes.push_back({p.at("layer").get<std::size_t>(),
                                 split_from_name(p.at("split").get<std::string>()),
                                 p.at("stage").get<std::string>(),
                                 p.at("accuracy").get<double>()});
    }
    return report;
}

void write_curves_csv(const MetricsReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write curves csv: " + path.string());
    out << "epoch,logits_norm,pre_rank,post_rank,alignment_avg\n";
    char buf[32];
    for (std::size_t i = 0; i < report.curve_epochs.size(); ++i) {
        out << report.curve_epochs[i] << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", report.logits_norm[i]);
        out << buf << ',' << report.pre_rank[i] << ',' << report.post_rank[i] << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", report.alignment_avg[i]);
        out << buf << '\n';
    }
}

} // namespace spectra
