#include "tokgain/phi.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "tokgain/error.hpp"
#include "tokgain/optim.hpp"
#include "tokgain/rng.hpp"
#include "tokgain/util.hpp"

namespace tokgain {

TableStats TableStats::from(const GainTable& table) {
    TableStats s;
    for (const WordRecord& r : table.records) {
        s.max_gain = std::max(s.max_gain, r.gain);
        s.max_freq = std::max(s.max_freq, r.freq);
    }
    return s;
}

FeatureVector featurize(const WordRecord& record, const TableStats& stats) {
    std::size_t codepoints = 0;
    std::size_t alpha = 0;
    std::size_t seps = 0;
    for (std::size_t i = 0; i < record.word.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(record.word[i]);
        if ((c & 0xC0) == 0x80) continue; // continuation byte
        ++codepoints;
        if (c >= 0x80) {
            ++alpha; // non-ASCII counts as alphabetic
        } else if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
            ++alpha;
        } else if (c == '_' || c == '-' || c == '.' || (c >= '0' && c <= '9')) {
            ++seps;
        }
    }
    if (codepoints == 0) throw input_error("cannot featurize an empty word");

    FeatureVector f;
    f[0] = stats.max_gain > 0.0 ? record.gain / stats.max_gain : 0.0;
    f[1] = static_cast<double>(std::min<std::size_t>(codepoints, 32)) / 32.0;
    f[2] = std::log(1.0 + static_cast<double>(record.freq)) /
           std::log(1.0 + static_cast<double>(stats.max_freq));
    f[3] = static_cast<double>(alpha) / static_cast<double>(codepoints);
    f[4] = static_cast<double>(seps) / static_cast<double>(codepoints);
    return f;
}

FeatureVector featurize(const WordRecord& record, const GainTable& table) {
    return featurize(record, TableStats::from(table));
}

PhiModel PhiModel::zeros(std::uint32_t hidden, double ridge_lambda) {
    if (hidden < 1) throw input_error("hidden width must be at least 1");
    PhiModel m;
    m.hidden = hidden;
    m.ridge_lambda = ridge_lambda;
    m.params.assign(m.param_count(), 0.0);
    return m;
}

std::span<double> PhiModel::hidden_weights() {
    return {params.data(), hidden * kFeatureCount};
}
std::span<double> PhiModel::hidden_bias() {
    return {params.data() + hidden * kFeatureCount, hidden};
}
std::span<double> PhiModel::output_weights() {
    return {params.data() + hidden * kFeatureCount + hidden, hidden};
}
double& PhiModel::output_bias() { return params[param_count() - 1]; }

std::span<const double> PhiModel::hidden_weights() const {
    return {params.data(), hidden * kFeatureCount};
}
std::span<const double> PhiModel::hidden_bias() const {
    return {params.data() + hidden * kFeatureCount, hidden};
}
std::span<const double> PhiModel::output_weights() const {
    return {params.data() + hidden * kFeatureCount + hidden, hidden};
}
double PhiModel::output_bias() const { return params[param_count() - 1]; }

namespace {

void check_model(const PhiModel& model) {
    if (model.params.size() != model.param_count()) {
        throw invariant_error("scorer parameter vector has the wrong size");
    }
}

void hidden_activations(const PhiModel& model, const FeatureVector& x,
                        std::span<double> h) {
    auto w = model.hidden_weights();
    auto b = model.hidden_bias();
    for (std::size_t j = 0; j < model.hidden; ++j) {
        double pre = b[j];
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            pre += w[j * kFeatureCount + f] * x[f];
        }
        h[j] = std::tanh(pre);
    }
}

double ridge_term(const PhiModel& model) {
    double sq = 0.0;
    for (double v : model.hidden_weights()) sq += v * v;
    for (double v : model.output_weights()) sq += v * v;
    return model.ridge_lambda * sq;
}

} // namespace

double phi_score(const PhiModel& model, const FeatureVector& features) {
    check_model(model);
    std::vector<double> h(model.hidden);
    hidden_activations(model, features, h);
    double out = model.output_bias();
    auto wo = model.output_weights();
    for (std::size_t j = 0; j < model.hidden; ++j) out += wo[j] * h[j];
    return out;
}

double phi_loss(const PhiModel& model, const PhiBatch& batch) {
    check_model(model);
    if (batch.empty()) throw input_error("loss requires a non-empty batch");
    std::vector<double> h(model.hidden);
    double mse = 0.0;
    auto wo = model.output_weights();
    for (const auto& [x, y] : batch) {
        hidden_activations(model, x, h);
        double pred = model.output_bias();
        for (std::size_t j = 0; j < model.hidden; ++j) pred += wo[j] * h[j];
        const double err = pred - y;
        mse += err * err;
    }
    return mse / static_cast<double>(batch.size()) + ridge_term(model);
}

double phi_loss_grad(const PhiModel& model, const PhiBatch& batch,
                     std::span<double> grad) {
    check_model(model);
    if (batch.empty()) throw input_error("loss requires a non-empty batch");
    if (grad.size() != model.param_count()) {
        throw invariant_error("gradient size does not match parameter count");
    }
    std::fill(grad.begin(), grad.end(), 0.0);

    const std::size_t H = model.hidden;
    auto w = model.hidden_weights();
    auto wo = model.output_weights();
    std::span<double> g_w = grad.subspan(0, H * kFeatureCount);
    std::span<double> g_b = grad.subspan(H * kFeatureCount, H);
    std::span<double> g_wo = grad.subspan(H * kFeatureCount + H, H);
    double& g_bo = grad[model.param_count() - 1];

    std::vector<double> h(H);
    double mse = 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (const auto& [x, y] : batch) {
        hidden_activations(model, x, h);
        double pred = model.output_bias();
        for (std::size_t j = 0; j < H; ++j) pred += wo[j] * h[j];
        const double err = pred - y;
        mse += err * err;
        const double dpred = 2.0 * err * inv_n;
        g_bo += dpred;
        for (std::size_t j = 0; j < H; ++j) {
            g_wo[j] += dpred * h[j];
            const double dpre = dpred * wo[j] * (1.0 - h[j] * h[j]);
            g_b[j] += dpre;
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                g_w[j * kFeatureCount + f] += dpre * x[f];
            }
        }
    }
    for (std::size_t i = 0; i < H * kFeatureCount; ++i) {
        g_w[i] += 2.0 * model.ridge_lambda * w[i];
    }
    for (std::size_t j = 0; j < H; ++j) {
        g_wo[j] += 2.0 * model.ridge_lambda * wo[j];
    }
    return mse * inv_n + ridge_term(model);
}

PhiModel train_phi(const std::vector<AnnotatedWord>& annotations,
                   const GainTable& table, const PhiTrainConfig& cfg) {
    if (annotations.empty()) throw input_error("training requires annotations");
    std::unordered_map<std::string_view, const WordRecord*> by_word;
    by_word.reserve(table.records.size());
    for (const WordRecord& r : table.records) by_word.emplace(r.word, &r);

    const TableStats stats = TableStats::from(table);
    PhiBatch batch;
    batch.reserve(annotations.size());
    for (const AnnotatedWord& a : annotations) {
        if (a.score < 1.0 || a.score > 5.0) {
            throw input_error("annotation score out of [1,5] for word '" + a.word + "'");
        }
        auto it = by_word.find(std::string_view(a.word));
        if (it == by_word.end()) {
            throw input_error("annotated word missing from gain table: '" + a.word + "'");
        }
        batch.emplace_back(featurize(*it->second, stats), a.score);
    }

    PhiModel model = PhiModel::zeros(cfg.hidden, cfg.ridge_lambda);
    Rng rng(cfg.seed);
    for (double& p : model.params) p = rng.uniform(-0.1, 0.1);

    AdamState opt(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
    std::vector<double> grad(model.param_count());
    for (std::uint32_t e = 0; e < cfg.epochs; ++e) {
        phi_loss_grad(model, batch, grad);
        opt.step(model.params, grad);
    }
    model.final_loss = phi_loss(model, batch);
    return model;
}

Selection select_heuristic(const GainTable& table, const PhiModel& model,
                           double epsilon_prime) {
    check_model(model);
    const TableStats stats = TableStats::from(table);
    struct Scored {
        const WordRecord* rec;
        double score;
    };
    std::vector<Scored> scored(table.records.size());
    parallel_for(table.records.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const WordRecord& r = table.records[i];
            scored[i] = {&r, phi_score(model, featurize(r, stats))};
        }
    });
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.rec->gain != b.rec->gain) return a.rec->gain > b.rec->gain;
        if (a.rec->freq != b.rec->freq) return a.rec->freq > b.rec->freq;
        return a.rec->word < b.rec->word;
    });
    Selection sel;
    sel.kind = SelectionKind::heuristic;
    sel.threshold = epsilon_prime;
    for (const Scored& s : scored) {
        if (s.score > epsilon_prime) sel.entries.push_back({s.rec->word, s.score});
    }
    return sel;
}

void save_phi_model(const PhiModel& model, const std::filesystem::path& path) {
    check_model(model);
    nlohmann::json j;
    j["features"] = kFeatureSpec;
    j["hidden_dim"] = model.hidden;
    j["ridge_lambda"] = model.ridge_lambda;
    j["final_loss"] = model.final_loss;
    j["hidden_weights"] = std::vector<double>(model.hidden_weights().begin(),
                                              model.hidden_weights().end());
    j["hidden_bias"] = std::vector<double>(model.hidden_bias().begin(),
                                           model.hidden_bias().end());
    j["output_weights"] = std::vector<double>(model.output_weights().begin(),
                                              model.output_weights().end());
    j["output_bias"] = model.output_bias();
    write_text_file(path, j.dump(2) + "\n");
}

PhiModel load_phi_model(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw input_error("malformed scorer file " + path.string() + ": " + e.what());
    }
    if (!j.contains("features") || j["features"] != kFeatureSpec) {
        throw input_error("scorer file " + path.string() +
                          " was built for a different feature spec");
    }
    PhiModel model;
    try {
        model.hidden = j.at("hidden_dim").get<std::uint32_t>();
        model.ridge_lambda = j.at("ridge_lambda").get<double>();
        model.final_loss = j.at("final_loss").get<double>();
        auto hw = j.at("hidden_weights").get<std::vector<double>>();
        auto hb = j.at("hidden_bias").get<std::vector<double>>();
        auto ow = j.at("output_weights").get<std::vector<double>>();
        double ob = j.at("output_bias").get<double>();
        if (model.hidden < 1 || hw.size() != model.hidden * kFeatureCount ||
            hb.size() != model.hidden || ow.size() != model.hidden) {
            throw input_error("scorer file " + path.string() + " has inconsistent shapes");
        }
        model.params.reserve(model.param_count());
        model.params.insert(model.params.end(), hw.begin(), hw.end());
        model.params.insert(model.params.end(), hb.begin(), hb.end());
        model.params.insert(model.params.end(), ow.begin(), ow.end());
        model.params.push_back(ob);
    } catch (const nlohmann::json::exception& e) {
        throw input_error("scorer file " + path.string() + " is malformed: " + e.what());
    }
    return model;
}

std::vector<AnnotatedWord> read_annotations(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::vector<AnnotatedWord> out;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw input_error("annotations " + path.string() + " line " +
                              std::to_string(lineno) + ": expected 'word<TAB>score'");
        }
        AnnotatedWord a;
        a.word = line.substr(0, tab);
        try {
            a.score = std::stod(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw input_error("annotations " + path.string() + " line " +
                              std::to_string(lineno) + ": unparsable score");
        }
        if (a.score < 1.0 || a.score > 5.0) {
            throw input_error("annotations " + path.string() + " line " +
                              std::to_string(lineno) + ": score outside [1,5]");
        }
        if (!seen.insert(a.word).second) {
            throw input_error("annotations " + path.string() + " line " +
                              std::to_string(lineno) + ": duplicate word '" + a.word + "'");
        }
        out.push_back(std::move(a));
    }
    return out;
}

void write_annotations(const std::vector<AnnotatedWord>& annotations,
                       const std::filesystem::path& path) {
    std::string out;
    for (const AnnotatedWord& a : annotations) {
        out += a.word;
        out += '\t';
        out += format_double(a.score);
        out += '\n';
    }
    write_text_file(path, out);
}

} // namespace tokgain
