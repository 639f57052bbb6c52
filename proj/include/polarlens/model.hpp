#pragma once
// Binary logistic regression per dimension, trained on binned domain scores.
// Full-batch gradient descent on L2-regularized log-loss, stratified k-fold
// evaluation, standard confusion metrics.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polarlens/common.hpp"

namespace polarlens {

enum class FeatureKind { BOW, LDA, EMBED };

std::string_view to_string(FeatureKind kind);
std::optional<FeatureKind> feature_kind_from_string(std::string_view s);

// Row-sparse feature matrix; dense sources fill every column. Labels are the
// binned poles: PosPole = 1, NegPole = 0.
struct FeatureMatrix {
  std::size_t dim = 0;
  std::vector<std::string> user_ids;
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows;

  std::size_t size() const { return rows.size(); }
};

struct TrainParams {
  double lr = 0.1;
  double l2 = 1e-4;
  std::uint32_t epochs = 200;
  std::uint64_t rng_seed = 0;
};

// Per-feature z-scoring for dense feature kinds (LDA / EMBED); TF-IDF BOW
// rows pass through untouched. Stored with the model.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> stddev;  // zero-variance features keep stddev 1

  static Scaler fit(const FeatureMatrix& X);
  std::vector<double> apply(const std::vector<std::pair<std::uint32_t, double>>& row,
                            std::size_t dim) const;
};

struct LogRegModel {
  Dimension dimension = Dimension::Science;
  FeatureKind feature_kind = FeatureKind::EMBED;
  std::vector<double> weights;
  double bias = 0;
  std::optional<Scaler> scaler;
  TrainParams params;
  std::vector<double> loss_per_epoch;
  double stability_lr_bound = 0;  // lr below this keeps full-batch GD monotone
  std::string feature_hash;       // artifact hash of the training features
};

struct Metrics {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
  bool degenerate = false;  // some denominator was zero and reported as 0
};

Metrics metrics(const Confusion& c);

// Full-batch gradient descent from zero weights; loss recorded each epoch.
// Throws ValidationError if only one class is present.
LogRegModel train_logreg(const FeatureMatrix& X, const std::vector<int>& y,
                         const TrainParams& params, FeatureKind kind, Dimension dim,
                         bool standardize);

double predict_proba(const LogRegModel& model, const std::vector<std::pair<std::uint32_t, double>>& row);
inline int predict_label(double p) { return p >= 0.5 ? 1 : 0; }

// Regularized mean log-loss of the model on (X, y); the quantity GD descends.
double logreg_loss(const LogRegModel& model, const FeatureMatrix& X, const std::vector<int>& y);

// Analytic gradient at (weights, bias) over X as given (standardize first if
// the model would); exposed for finite-difference checks.
void logreg_gradient(const FeatureMatrix& X, const std::vector<int>& y,
                     const std::vector<double>& weights, double bias, double l2,
                     std::vector<double>& grad_w, double& grad_b);

struct EvalReport {
  std::size_t dataset_size = 0;
  int folds = 0;
  Confusion confusion;                 // summed over folds
  Metrics mean;                        // per-fold averages
  std::vector<Metrics> per_fold;
  std::vector<double> fold_accuracy;   // redundant view, kept for the report
  // (positives, negatives) per fold; stratification keeps these within +-1
  std::vector<std::pair<std::size_t, std::size_t>> fold_class_counts;
};

// Stratified k-fold, shuffled under rng_seed; scaler and model are refit per
// fold on the training split only. Throws if a class has fewer members than
// folds.
EvalReport kfold_cv(const FeatureMatrix& X, const std::vector<int>& y, int folds,
                    const TrainParams& params, FeatureKind kind, Dimension dim, bool standardize);

void save_model(const LogRegModel& model, const EvalReport* eval, const std::string& path);
LogRegModel load_model(const std::string& path, EvalReport* eval = nullptr);

// Reads either the sparse triplet CSV or a dense header CSV into a matrix.
FeatureMatrix load_feature_csv(const std::string& path, FeatureKind* detected = nullptr);

}  // namespace polarlens
