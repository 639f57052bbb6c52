#include "polarlens/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "polarlens/io_util.hpp"

namespace polarlens {

using nlohmann::json;

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::BOW: return "bow";
    case FeatureKind::LDA: return "lda";
    case FeatureKind::EMBED: return "embed";
  }
  return "?";
}

std::optional<FeatureKind> feature_kind_from_string(std::string_view s) {
  if (s == "bow") return FeatureKind::BOW;
  if (s == "lda") return FeatureKind::LDA;
  if (s == "embed") return FeatureKind::EMBED;
  return std::nullopt;
}

Scaler Scaler::fit(const FeatureMatrix& X) {
  Scaler s;
  s.mean.assign(X.dim, 0.0);
  s.stddev.assign(X.dim, 0.0);
  const double n = static_cast<double>(X.size());
  for (const auto& row : X.rows)
    for (auto& [i, v] : row) s.mean[i] += v;
  for (double& m : s.mean) m /= n;
  for (const auto& row : X.rows)
    for (auto& [i, v] : row) s.stddev[i] += (v - s.mean[i]) * (v - s.mean[i]);
  // absent sparse entries are zeros and contribute (0 - mean)^2 each
  std::vector<std::size_t> present(X.dim, 0);
  for (const auto& row : X.rows)
    for (auto& [i, v] : row) ++present[i];
  for (std::size_t i = 0; i < X.dim; ++i) {
    double zeros = n - static_cast<double>(present[i]);
    s.stddev[i] += zeros * s.mean[i] * s.mean[i];
    s.stddev[i] = std::sqrt(s.stddev[i] / n);
    if (s.stddev[i] < 1e-12) s.stddev[i] = 1.0;
  }
  return s;
}

std::vector<double> Scaler::apply(const std::vector<std::pair<std::uint32_t, double>>& row,
                                  std::size_t dim) const {
  std::vector<double> dense(dim, 0.0);
  for (auto& [i, v] : row) dense[i] = v;
  for (std::size_t i = 0; i < dim; ++i) dense[i] = (dense[i] - mean[i]) / stddev[i];
  return dense;
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// Rows standardized up front when a scaler is in play; afterwards everything
// runs on plain sparse rows.
FeatureMatrix prepared(const FeatureMatrix& X, const std::optional<Scaler>& scaler) {
  if (!scaler) return X;
  FeatureMatrix out;
  out.dim = X.dim;
  out.user_ids = X.user_ids;
  out.rows.reserve(X.size());
  for (const auto& row : X.rows) {
    std::vector<double> dense = scaler->apply(row, X.dim);
    std::vector<std::pair<std::uint32_t, double>> r;
    r.reserve(X.dim);
    for (std::size_t i = 0; i < X.dim; ++i) r.emplace_back(static_cast<std::uint32_t>(i), dense[i]);
    out.rows.push_back(std::move(r));
  }
  return out;
}

double dot_row(const std::vector<double>& w, double b,
               const std::vector<std::pair<std::uint32_t, double>>& row) {
  double z = b;
  for (auto& [i, v] : row) {
    if (i >= w.size()) throw ValidationError("feature index exceeds model dimensionality");
    z += w[i] * v;
  }
  return z;
}

}  // namespace

void logreg_gradient(const FeatureMatrix& X, const std::vector<int>& y,
                     const std::vector<double>& weights, double bias, double l2,
                     std::vector<double>& grad_w, double& grad_b) {
  grad_w.assign(weights.size(), 0.0);
  grad_b = 0;
  const double n = static_cast<double>(X.size());
  for (std::size_t r = 0; r < X.size(); ++r) {
    double p = sigmoid(dot_row(weights, bias, X.rows[r]));
    double err = p - static_cast<double>(y[r]);
    for (auto& [i, v] : X.rows[r]) grad_w[i] += err * v;
    grad_b += err;
  }
  for (std::size_t i = 0; i < grad_w.size(); ++i) grad_w[i] = grad_w[i] / n + l2 * weights[i];
  grad_b /= n;
}

double logreg_loss(const LogRegModel& model, const FeatureMatrix& X, const std::vector<int>& y) {
  FeatureMatrix P = prepared(X, model.scaler);
  double loss = 0;
  for (std::size_t r = 0; r < P.size(); ++r) {
    double z = dot_row(model.weights, model.bias, P.rows[r]);
    loss += softplus(z) - static_cast<double>(y[r]) * z;
  }
  loss /= static_cast<double>(P.size());
  double reg = 0;
  for (double w : model.weights) reg += w * w;
  return loss + 0.5 * model.params.l2 * reg;
}

LogRegModel train_logreg(const FeatureMatrix& X, const std::vector<int>& y,
                         const TrainParams& params, FeatureKind kind, Dimension dim,
                         bool standardize) {
  if (X.size() != y.size()) throw ValidationError("features and labels differ in length");
  if (X.size() == 0) throw ValidationError("empty training set");
  bool has_pos = false, has_neg = false;
  for (int label : y) (label == 1 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw ValidationError("training needs both classes; got a one-class input");

  LogRegModel model;
  model.dimension = dim;
  model.feature_kind = kind;
  model.params = params;
  if (standardize) model.scaler = Scaler::fit(X);
  model.weights.assign(X.dim, 0.0);
  model.bias = 0;

  FeatureMatrix P = prepared(X, model.scaler);

  double max_sq = 0;
  for (const auto& row : P.rows) {
    double sq = 1.0;  // bias column
    for (auto& [i, v] : row) sq += v * v;
    max_sq = std::max(max_sq, sq);
  }
  model.stability_lr_bound = 1.0 / (0.25 * max_sq + params.l2);

  std::vector<double> grad_w;
  double grad_b = 0;
  model.loss_per_epoch.reserve(params.epochs);
  for (std::uint32_t epoch = 0; epoch < params.epochs; ++epoch) {
    logreg_gradient(P, y, model.weights, model.bias, params.l2, grad_w, grad_b);
    for (std::size_t i = 0; i < model.weights.size(); ++i)
      model.weights[i] -= params.lr * grad_w[i];
    model.bias -= params.lr * grad_b;

    double loss = 0;
    for (std::size_t r = 0; r < P.size(); ++r) {
      double z = dot_row(model.weights, model.bias, P.rows[r]);
      loss += softplus(z) - static_cast<double>(y[r]) * z;
    }
    loss /= static_cast<double>(P.size());
    double reg = 0;
    for (double w : model.weights) reg += w * w;
    model.loss_per_epoch.push_back(loss + 0.5 * params.l2 * reg);
  }
  return model;
}

double predict_proba(const LogRegModel& model,
                     const std::vector<std::pair<std::uint32_t, double>>& row) {
  for (auto& [i, v] : row)
    if (i >= model.weights.size())
      throw ValidationError("feature index exceeds model dimensionality");
  if (model.scaler) {
    std::vector<double> dense = model.scaler->apply(row, model.weights.size());
    double z = model.bias;
    for (std::size_t i = 0; i < dense.size(); ++i) z += model.weights[i] * dense[i];
    return sigmoid(z);
  }
  return sigmoid(dot_row(model.weights, model.bias, row));
}

Metrics metrics(const Confusion& c) {
  if (c.total() == 0) throw ValidationError("metrics over an empty confusion");
  Metrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fp > 0)
    m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  else
    m.degenerate = true;
  if (c.tp + c.fn > 0)
    m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  else
    m.degenerate = true;
  if (m.precision + m.recall > 0)
    m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall);
  else
    m.degenerate = true;
  return m;
}

EvalReport kfold_cv(const FeatureMatrix& X, const std::vector<int>& y, int folds,
                    const TrainParams& params, FeatureKind kind, Dimension dim,
                    bool standardize) {
  if (folds < 2) throw ValidationError("cross-validation needs folds >= 2");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] == 1 ? pos : neg).push_back(i);
  if (pos.size() < static_cast<std::size_t>(folds) || neg.size() < static_cast<std::size_t>(folds))
    throw ValidationError("each class needs at least `folds` members");

  std::mt19937_64 rng(params.rng_seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  std::vector<std::vector<std::size_t>> fold_members(folds);
  for (std::size_t i = 0; i < pos.size(); ++i) fold_members[i % folds].push_back(pos[i]);
  for (std::size_t i = 0; i < neg.size(); ++i) fold_members[i % folds].push_back(neg[i]);

  EvalReport report;
  report.dataset_size = X.size();
  report.folds = folds;
  for (int f = 0; f < folds; ++f) {
    std::vector<bool> held(X.size(), false);
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t m : fold_members[f]) {
      held[m] = true;
      (y[m] == 1 ? n_pos : n_neg) += 1;
    }
    report.fold_class_counts.emplace_back(n_pos, n_neg);

    FeatureMatrix train;
    train.dim = X.dim;
    std::vector<int> train_y;
    for (std::size_t i = 0; i < X.size(); ++i) {
      if (held[i]) continue;
      train.rows.push_back(X.rows[i]);
      train.user_ids.push_back(X.user_ids.empty() ? std::string() : X.user_ids[i]);
      train_y.push_back(y[i]);
    }
    LogRegModel model = train_logreg(train, train_y, params, kind, dim, standardize);

    Confusion c;
    for (std::size_t m : fold_members[f]) {
      int pred = predict_label(predict_proba(model, X.rows[m]));
      if (y[m] == 1)
        (pred == 1 ? c.tp : c.fn) += 1;
      else
        (pred == 1 ? c.fp : c.tn) += 1;
    }
    Metrics fm = metrics(c);
    report.per_fold.push_back(fm);
    report.fold_accuracy.push_back(fm.accuracy);
    report.confusion.tp += c.tp;
    report.confusion.fp += c.fp;
    report.confusion.tn += c.tn;
    report.confusion.fn += c.fn;
  }
  for (const auto& m : report.per_fold) {
    report.mean.accuracy += m.accuracy;
    report.mean.precision += m.precision;
    report.mean.recall += m.recall;
    report.mean.f1 += m.f1;
    report.mean.degenerate = report.mean.degenerate || m.degenerate;
  }
  const double nf = static_cast<double>(folds);
  report.mean.accuracy /= nf;
  report.mean.precision /= nf;
  report.mean.recall /= nf;
  report.mean.f1 /= nf;
  return report;
}

namespace {

json metrics_json(const Metrics& m) {
  return json{{"accuracy", m.accuracy},
              {"precision", m.precision},
              {"recall", m.recall},
              {"f1", m.f1},
              {"degenerate", m.degenerate}};
}

Metrics metrics_from_json(const json& j) {
  Metrics m;
  m.accuracy = j.at("accuracy").get<double>();
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f1 = j.at("f1").get<double>();
  m.degenerate = j.at("degenerate").get<bool>();
  return m;
}

}  // namespace

void save_model(const LogRegModel& model, const EvalReport* eval, const std::string& path) {
  json j;
  j["dimension"] = std::string(to_string(model.dimension));
  j["feature_kind"] = std::string(to_string(model.feature_kind));
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  if (model.scaler) {
    j["scaler"] = {{"mean", model.scaler->mean}, {"stddev", model.scaler->stddev}};
  } else {
    j["scaler"] = nullptr;
  }
  j["train"] = {{"lr", model.params.lr},
                {"l2", model.params.l2},
                {"epochs", model.params.epochs},
                {"rng_seed", model.params.rng_seed},
                {"stability_lr_bound", model.stability_lr_bound},
                {"feature_hash", model.feature_hash}};
  j["loss_per_epoch"] = model.loss_per_epoch;
  if (eval) {
    j["eval"] = {{"dataset_size", eval->dataset_size},
                 {"folds", eval->folds},
                 {"confusion",
                  {{"tp", eval->confusion.tp},
                   {"fp", eval->confusion.fp},
                   {"tn", eval->confusion.tn},
                   {"fn", eval->confusion.fn}}},
                 {"mean", metrics_json(eval->mean)}};
    json pf = json::array();
    for (const auto& m : eval->per_fold) pf.push_back(metrics_json(m));
    j["eval"]["per_fold"] = pf;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

LogRegModel load_model(const std::string& path, EvalReport* eval) {
  json j = json::parse(read_text_file(path));
  LogRegModel model;
  auto dim = dimension_from_string(j.at("dimension").get<std::string>());
  auto kind = feature_kind_from_string(j.at("feature_kind").get<std::string>());
  if (!dim || !kind) throw ValidationError("model '" + path + "': bad dimension or kind");
  model.dimension = *dim;
  model.feature_kind = *kind;
  model.weights = j.at("weights").get<std::vector<double>>();
  model.bias = j.at("bias").get<double>();
  if (!j.at("scaler").is_null()) {
    Scaler s;
    s.mean = j["scaler"].at("mean").get<std::vector<double>>();
    s.stddev = j["scaler"].at("stddev").get<std::vector<double>>();
    model.scaler = std::move(s);
  }
  const auto& t = j.at("train");
  model.params.lr = t.at("lr").get<double>();
  model.params.l2 = t.at("l2").get<double>();
  model.params.epochs = t.at("epochs").get<std::uint32_t>();
  model.params.rng_seed = t.at("rng_seed").get<std::uint64_t>();
  model.stability_lr_bound = t.at("stability_lr_bound").get<double>();
  model.feature_hash = t.at("feature_hash").get<std::string>();
  model.loss_per_epoch = j.at("loss_per_epoch").get<std::vector<double>>();
  if (eval && j.contains("eval")) {
    const auto& e = j["eval"];
    eval->dataset_size = e.at("dataset_size").get<std::size_t>();
    eval->folds = e.at("folds").get<int>();
    eval->confusion.tp = e.at("confusion").at("tp").get<std::uint64_t>();
    eval->confusion.fp = e.at("confusion").at("fp").get<std::uint64_t>();
    eval->confusion.tn = e.at("confusion").at("tn").get<std::uint64_t>();
    eval->confusion.fn = e.at("confusion").at("fn").get<std::uint64_t>();
    eval->mean = metrics_from_json(e.at("mean"));
    for (const auto& m : e.at("per_fold")) {
      eval->per_fold.push_back(metrics_from_json(m));
      eval->fold_accuracy.push_back(eval->per_fold.back().accuracy);
    }
  }
  return model;
}

FeatureMatrix load_feature_csv(const std::string& path, FeatureKind* detected) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open features '" + path + "'");
  std::string header;
  if (!std::getline(in, header)) throw ValidationError("feature file '" + path + "' is empty");

  FeatureMatrix X;
  std::string line;
  std::size_t lineno = 1;
  if (header.rfind("user_id,index,value", 0) == 0) {
    if (detected) *detected = FeatureKind::BOW;
    std::uint32_t max_index = 0;
    std::map<std::string, std::size_t> row_of;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto f = split_csv_line(line);
      if (f.size() != 3) throw ValidationError(path + ":" + std::to_string(lineno) + ": bad row");
      auto [it, inserted] = row_of.try_emplace(f[0], X.rows.size());
      if (inserted) {
        X.rows.emplace_back();
        X.user_ids.push_back(f[0]);
      }
      std::uint32_t idx = static_cast<std::uint32_t>(parse_count_field(path, lineno, f[1]));
      max_index = std::max(max_index, idx);
      X.rows[it->second].emplace_back(idx, parse_double_field(path, lineno, f[2]));
    }
    X.dim = X.rows.empty() ? 0 : max_index + 1;
    for (auto& row : X.rows) std::sort(row.begin(), row.end());
    return X;
  }

  auto cols = split_csv_line(header);
  if (cols.empty() || cols[0] != "user_id")
    throw ValidationError("'" + path + "' is not a feature file");
  X.dim = cols.size() - 1;
  if (detected) {
    *detected = (!cols.empty() && cols.size() > 1 && cols[1].size() > 0 && cols[1][0] == 't')
                    ? FeatureKind::LDA
                    : FeatureKind::EMBED;
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != cols.size())
      throw ValidationError(path + ":" + std::to_string(lineno) + ": bad row");
    X.user_ids.push_back(f[0]);
    std::vector<std::pair<std::uint32_t, double>> row;
    row.reserve(X.dim);
    for (std::size_t i = 1; i < f.size(); ++i)
      row.emplace_back(static_cast<std::uint32_t>(i - 1), parse_double_field(path, lineno, f[i]));
    X.rows.push_back(std::move(row));
  }
  return X;
}

}  // namespace polarlens
