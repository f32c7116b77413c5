#include "occusim/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "occusim/error.hpp"
#include "occusim/logistic.hpp"

namespace occusim {

double accuracy(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels) {
  if (predictions.size() != labels.size()) throw DomainError("prediction/label length mismatch");
  if (labels.empty()) throw DomainError("accuracy of an empty set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predictions[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double f1_score(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels,
                std::uint8_t positive_class) {
  if (predictions.size() != labels.size()) throw DomainError("prediction/label length mismatch");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predictions[i] == positive_class;
    const bool t = labels[i] == positive_class;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
  }
  if (tp == 0) return 0.0;
  // Harmonic mean of precision and recall, as one correctly rounded division.
  return static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
}

std::vector<FoldSpec> make_folds(int n_days, int k, bool wraparound) {
  if (k < 1 || k >= n_days) {
    throw DomainError("training days k=" + std::to_string(k) + " must lie in [1, " +
                      std::to_string(n_days - 1) + "]");
  }
  const int count = wraparound ? n_days : n_days - k + 1;
  std::vector<FoldSpec> folds;
  for (int start = 0; start < count; ++start) {
    FoldSpec f;
    f.k = k;
    for (int j = 0; j < k; ++j) f.train_days.push_back((start + j) % n_days);
    for (int d = 0; d < n_days; ++d) {
      if (std::find(f.train_days.begin(), f.train_days.end(), d) == f.train_days.end()) {
        f.test_days.push_back(d);
      }
    }
    folds.push_back(std::move(f));
  }
  return folds;
}

const char* to_string(Mode m) {
  switch (m) {
    case Mode::transfer: return "transfer";
    case Mode::cold: return "cold";
    case Mode::logistic: return "logistic";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  if (s == "transfer") return Mode::transfer;
  if (s == "cold") return Mode::cold;
  if (s == "logistic") return Mode::logistic;
  throw DomainError("unknown mode '" + s + "'");
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) return {};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

const Aggregate* ProtocolReport::find(int k, Mode mode) const {
  for (const auto& a : aggregates) {
    if (a.k == k && a.mode == mode) return &a;
  }
  return nullptr;
}

std::vector<Aggregate> aggregate(std::span<const RunResult> runs) {
  std::map<std::pair<int, int>, std::vector<const RunResult*>> groups;
  for (const auto& r : runs) groups[{r.k, static_cast<int>(r.mode)}].push_back(&r);
  std::vector<Aggregate> out;
  for (const auto& [key, group] : groups) {
    std::vector<double> acc, f1, ep;
    for (const auto* r : group) {
      acc.push_back(r->accuracy);
      f1.push_back(r->f1);
      ep.push_back(static_cast<double>(r->epochs_to_best));
    }
    out.push_back({key.first, static_cast<Mode>(key.second), group.size(), summarize(acc),
                   summarize(f1), summarize(ep)});
  }
  return out;
}

namespace {

WindowSet gather(const std::vector<WindowSet>& days, const std::vector<int>& which) {
  WindowSet out(days.front().length());
  for (int d : which) out.append(days.at(static_cast<std::size_t>(d)));
  return out;
}

struct Task {
  int k;
  int fold;
  std::uint64_t seed;
  Mode mode;
  const FoldSpec* spec;
};

[[noreturn]] void rethrow_annotated(const Task& t) {
  const std::string where = " [k=" + std::to_string(t.k) + ", fold=" + std::to_string(t.fold) +
                            ", seed=" + std::to_string(t.seed) + ", mode=" + to_string(t.mode) +
                            "]";
  try {
    throw;
  } catch (const NumericalError& e) {
    throw NumericalError(e.what() + where);
  } catch (const StructuralError& e) {
    throw StructuralError(e.what() + where);
  } catch (const DomainError& e) {
    throw DomainError(e.what() + where);
  }
}

}  // namespace

ProtocolReport run_protocol(const std::vector<WindowSet>& days, const NetworkWeights* base,
                            const ProtocolConfig& config) {
  if (days.empty()) throw DomainError("no days to evaluate");
  if (config.n_seeds < 1) throw DomainError("at least one seed is required");
  const int n_days = static_cast<int>(days.size());

  std::vector<std::vector<FoldSpec>> folds;
  for (int k : config.ks) folds.push_back(make_folds(n_days, k, config.wraparound));

  std::vector<Task> tasks;
  for (std::size_t ki = 0; ki < config.ks.size(); ++ki) {
    for (std::size_t f = 0; f < folds[ki].size(); ++f) {
      for (int s = 0; s < config.n_seeds; ++s) {
        for (Mode m : {Mode::transfer, Mode::cold, Mode::logistic}) {
          if (std::find(config.modes.begin(), config.modes.end(), m) == config.modes.end()) continue;
          if (m == Mode::transfer && base == nullptr) continue;
          tasks.push_back({config.ks[ki], static_cast<int>(f),
                           config.base_seed + static_cast<std::uint64_t>(s), m, &folds[ki][f]});
        }
      }
    }
  }

  // The logistic fit has no randomness; fit once per fold and reuse it.
  std::map<const FoldSpec*, RunResult> logistic_cache;
  for (const auto& t : tasks) {
    if (t.mode != Mode::logistic || logistic_cache.contains(t.spec)) continue;
    try {
      const WindowSet train_set = gather(days, t.spec->train_days);
      const WindowSet test_set = gather(days, t.spec->test_days);
      const auto w = fit_logistic(train_set);
      const auto pred = predict_logistic(w, test_set);
      logistic_cache[t.spec] = {t.k, t.fold, 0, Mode::logistic, accuracy(pred, test_set.labels()),
                                f1_score(pred, test_set.labels()), 0};
    } catch (const Error&) {
      rethrow_annotated(t);
    }
  }

  std::vector<RunResult> results(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  auto run_task = [&](std::size_t i) {
    const Task& t = tasks[i];
    try {
      RunResult r;
      if (t.mode == Mode::logistic) {
        r = logistic_cache.at(t.spec);
      } else {
        const WindowSet train_set = gather(days, t.spec->train_days);
        const WindowSet test_set = gather(days, t.spec->test_days);
        TrainConfig tc = config.train;
        tc.seed = t.seed;
        const auto trained =
            train(train_set, config.net, tc, t.mode == Mode::transfer ? base : nullptr);
        const auto pred = predict(trained.weights, test_set);
        r.accuracy = accuracy(pred, test_set.labels());
        r.f1 = f1_score(pred, test_set.labels());
        r.epochs_to_best = trained.report.epochs_to_best;
      }
      r.k = t.k;
      r.fold = t.fold;
      r.seed = t.seed;
      r.mode = t.mode;
      results[i] = r;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const int jobs = std::max(1, config.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (int j = 0; j < jobs; ++j) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) run_task(i);
      });
    }
    for (auto& w : workers) w.join();
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error&) {
      rethrow_annotated(tasks[i]);
    }
  }

  ProtocolReport report;
  report.runs = std::move(results);
  report.aggregates = aggregate(report.runs);
  return report;
}

std::string format_table(const ProtocolReport& report) {
  std::vector<int> ks;
  for (const auto& a : report.aggregates) {
    if (std::find(ks.begin(), ks.end(), a.k) == ks.end()) ks.push_back(a.k);
  }
  std::sort(ks.begin(), ks.end());
  std::ostringstream out;
  out << std::left << std::setw(12) << "Model" << std::setw(10) << "Metric";
  for (int k : ks) out << std::setw(20) << (std::to_string(k) + (k == 1 ? " Day" : " Days"));
  out << '\n';
  auto cell = [](const Summary& s, int precision) {
    std::ostringstream c;
    c << std::fixed << std::setprecision(precision) << s.mean << " (+-" << s.stddev << ")";
    return c.str();
  };
  for (Mode m : {Mode::transfer, Mode::cold, Mode::logistic}) {
    bool any = false;
    for (int k : ks) any = any || report.find(k, m) != nullptr;
    if (!any) continue;
    const std::pair<const char*, int> rows[] = {{"Accuracy", 3}, {"F1", 3}, {"Epochs", 1}};
    for (const auto& [metric, precision] : rows) {
      if (m == Mode::logistic && std::string(metric) == "Epochs") continue;
      out << std::setw(12) << (std::string(metric) == "Accuracy" ? to_string(m) : "")
          << std::setw(10) << metric;
      for (int k : ks) {
        const Aggregate* a = report.find(k, m);
        if (a == nullptr) {
          out << std::setw(20) << "-";
          continue;
        }
        const Summary& s = std::string(metric) == "Accuracy" ? a->accuracy
                           : std::string(metric) == "F1"     ? a->f1
                                                             : a->epochs;
        out << std::setw(20) << cell(s, precision);
      }
      out << '\n';
    }
  }
  return out.str();
}

std::string to_json(const ProtocolReport& report) {
  nlohmann::json j;
  j["runs"] = nlohmann::json::array();
  for (const auto& r : report.runs) {
    j["runs"].push_back({{"k", r.k},
                         {"fold", r.fold},
                         {"seed", r.seed},
                         {"mode", to_string(r.mode)},
                         {"accuracy", r.accuracy},
                         {"f1", r.f1},
                         {"epochs_to_best", r.epochs_to_best}});
  }
  j["aggregates"] = nlohmann::json::array();
  for (const auto& a : report.aggregates) {
    auto s = [](const Summary& x) { return nlohmann::json{{"mean", x.mean}, {"std", x.stddev}}; };
    j["aggregates"].push_back({{"k", a.k},
                               {"mode", to_string(a.mode)},
                               {"runs", a.runs},
                               {"accuracy", s(a.accuracy)},
                               {"f1", s(a.f1)},
                               {"epochs_to_best", s(a.epochs)}});
  }
  return j.dump(2);
}

std::string to_csv(const ProtocolReport& report) {
  std::ostringstream out;
  out << "k,fold,seed,mode,accuracy,f1,epochs_to_best\n";
  out << std::setprecision(17);
  for (const auto& r : report.runs) {
    out << r.k << ',' << r.fold << ',' << r.seed << ',' << to_string(r.mode) << ',' << r.accuracy
        << ',' << r.f1 << ',' << r.epochs_to_best << '\n';
  }
  return out.str();
}

}  // namespace occusim
