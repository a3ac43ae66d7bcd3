#include "pded/report.hpp"
#include "pded/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace pded {

namespace {

std::optional<double> maybe(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::pair<double, double> mean_sem(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

TrialSummary read_trial_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open log " + path.string());
  TrialSummary s;
  s.path = path;
  std::string line;
  bool header = false, footer = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::FormatError, "bad JSON line in " + path.string());
    if (j.value("header", false)) {
      header = true;
      s.pde = j.value("pde", std::string{});
      s.mode = j.value("mode", std::string{});
      s.trial = j.value("trial", 0);
    } else if (j.value("footer", false)) {
      footer = true;
      s.train_r2 = maybe(j, "train_r2");
      s.test_r2 = maybe(j, "test_r2");
      s.recovered = j.value("recovered", false);
    } else {
      const int iter = j.at("iter").get<int>();
      if (iter < 1) throw Error(ErrorCode::FormatError, "bad iteration index in " + path.string());
      if (static_cast<std::size_t>(iter) > s.best_test_r2.size()) s.best_test_r2.resize(iter);
      s.best_test_r2[iter - 1] = maybe(j, "best_test_r2");
    }
  }
  if (!header) throw Error(ErrorCode::FormatError, "log without header: " + path.string());
  if (!footer) throw Error(ErrorCode::FormatError, "log without footer: " + path.string());
  return s;
}

Report build_report(const std::filesystem::path& runs_dir) {
  Report r;
  std::error_code ec;
  if (!std::filesystem::is_directory(runs_dir, ec)) throw Error(ErrorCode::NoRuns, "no such directory " + runs_dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(runs_dir))
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      r.trials.push_back(read_trial_log(f));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::FormatError) throw;
    }
  }
  if (r.trials.empty()) throw Error(ErrorCode::NoRuns, "no completed run logs under " + runs_dir.string());

  std::map<std::pair<std::string, std::string>, std::vector<const TrialSummary*>> groups;
  for (const auto& t : r.trials) groups[{t.pde, t.mode}].push_back(&t);

  for (const auto& [key, members] : groups) {
    GroupSummary g;
    g.pde = key.first;
    g.mode = key.second;
    g.trials = static_cast<int>(members.size());
    g.single_trial = members.size() == 1;
    std::vector<double> train, test;
    std::size_t longest = 0;
    for (const auto* t : members) {
      if (t->train_r2) train.push_back(*t->train_r2);
      if (t->test_r2) test.push_back(*t->test_r2);
      g.recovered += t->recovered ? 1 : 0;
      longest = std::max(longest, t->best_test_r2.size());
    }
    g.mean_train_r2 = mean_sem(train).first;
    std::tie(g.mean_test_r2, g.sem_test_r2) = mean_sem(test);
    r.groups.push_back(g);

    for (std::size_t i = 0; i < longest; ++i) {
      std::vector<double> vals;
      for (const auto* t : members)
        if (i < t->best_test_r2.size() && t->best_test_r2[i]) vals.push_back(*t->best_test_r2[i]);
      if (vals.empty()) continue;
      const auto [m, sem] = mean_sem(vals);
      r.trajectory.push_back({g.pde, g.mode, static_cast<int>(i + 1), m, sem, static_cast<int>(vals.size())});
    }
  }
  return r;
}

std::string summary_csv(const Report& r) {
  std::ostringstream out;
  out << "pde,mode,trials,mean_train_r2,mean_test_r2,sem_test_r2,recovered,warning\n";
  for (const auto& g : r.groups)
    out << g.pde << ',' << g.mode << ',' << g.trials << ',' << fmt(g.mean_train_r2) << ',' << fmt(g.mean_test_r2)
        << ',' << fmt(g.sem_test_r2) << ',' << g.recovered << ',' << (g.single_trial ? "single_trial" : "") << '\n';
  return out.str();
}

std::string summary_table(const Report& r) {
  std::vector<std::vector<std::string>> rows{
      {"pde", "mode", "trials", "train R2", "test R2", "SEM", "recovered"}};
  for (const auto& g : r.groups)
    rows.push_back({g.pde, g.mode, std::to_string(g.trials), fmt_short(g.mean_train_r2), fmt_short(g.mean_test_r2),
                    fmt_short(g.sem_test_r2) + (g.single_trial ? " (n=1)" : ""),
                    std::to_string(g.recovered) + "/" + std::to_string(g.trials)});
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::ostringstream out;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (std::size_t c = 0; c < rows[k].size(); ++c) {
      out << rows[k][c];
      if (c + 1 < rows[k].size()) out << std::string(width[c] - rows[k][c].size() + 2, ' ');
    }
    out << '\n';
    if (k == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      out << std::string(total - 2, '-') << '\n';
    }
  }
  return out.str();
}

std::string trajectory_csv(const Report& r) {
  std::ostringstream out;
  out << "pde,mode,iter,mean_best_test_r2,sem,n\n";
  for (const auto& p : r.trajectory)
    out << p.pde << ',' << p.mode << ',' << p.iter << ',' << fmt(p.mean_best_test_r2) << ',' << fmt(p.sem) << ','
        << p.n << '\n';
  return out.str();
}

}  // namespace pded
