#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tokgain/gain.hpp"
#include "tokgain/selection.hpp"

namespace tokgain {

inline constexpr std::size_t kFeatureCount = 5;
inline constexpr const char* kFeatureSpec = "wordfeat-v1";
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "gain_norm", "length_norm", "log_freq_norm", "alpha_fraction", "separator_density"};

using FeatureVector = std::array<double, kFeatureCount>;

// Table-wide quantities the features are normalized against.
struct TableStats {
    double max_gain = 0.0;
    std::uint64_t max_freq = 1;

    static TableStats from(const GainTable& table);
};

FeatureVector featurize(const WordRecord& record, const TableStats& stats);
FeatureVector featurize(const WordRecord& record, const GainTable& table);

struct AnnotatedWord {
    std::string word;
    double score = 0.0; // desirability, 1 to 5
};

// One-hidden-layer tanh scorer over word features.
struct PhiModel {
    std::uint32_t hidden = 16;
    double ridge_lambda = 0.0;
    double final_loss = 0.0;
    // [hidden_weights (hidden x features, row-major) | hidden_bias |
    //  output_weights | output_bias]
    std::vector<double> params;

    static PhiModel zeros(std::uint32_t hidden, double ridge_lambda);
    std::size_t param_count() const { return hidden * kFeatureCount + 2 * hidden + 1; }

    std::span<double> hidden_weights();
    std::span<double> hidden_bias();
    std::span<double> output_weights();
    double& output_bias();
    std::span<const double> hidden_weights() const;
    std::span<const double> hidden_bias() const;
    std::span<const double> output_weights() const;
    double output_bias() const;
};

double phi_score(const PhiModel& model, const FeatureVector& features);

using PhiBatch = std::vector<std::pair<FeatureVector, double>>;

// Mean squared error plus ridge penalty on weights (biases are exempt).
double phi_loss(const PhiModel& model, const PhiBatch& batch);

// Loss with analytic gradient; grad must match model.param_count().
double phi_loss_grad(const PhiModel& model, const PhiBatch& batch,
                     std::span<double> grad);

struct PhiTrainConfig {
    std::uint32_t hidden = 16;
    std::uint32_t epochs = 2000; // full-batch steps
    double lr = 1e-3;
    double ridge_lambda = 1e-4;
    std::uint64_t seed = 0;
};

// Fits the scorer to annotated words drawn from the table. Scores must lie
// in [1, 5]; every word must appear in the table.
PhiModel train_phi(const std::vector<AnnotatedWord>& annotations,
                   const GainTable& table, const PhiTrainConfig& cfg);

// Words whose model score strictly exceeds epsilon_prime, ordered by score.
Selection select_heuristic(const GainTable& table, const PhiModel& model,
                           double epsilon_prime);

void save_phi_model(const PhiModel& model, const std::filesystem::path& path);
PhiModel load_phi_model(const std::filesystem::path& path);

std::vector<AnnotatedWord> read_annotations(const std::filesystem::path& path);
void write_annotations(const std::vector<AnnotatedWord>& annotations,
                       const std::filesystem::path& path);

} // namespace tokgain
