#include "core/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "core/error.hpp"
#include "core/format.hpp"

namespace cycleuq {

double ExpFit::model(int n) const { return eps_hat * std::pow(k_hat, n) + b_hat; }

LinearPart project_linear(std::span<const double> d, int start_index, double k) {
  const auto m = static_cast<double>(d.size());
  std::vector<double> u(d.size());
  double u_mean = 0.0;
  double d_mean = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    u[i] = std::pow(k, start_index + static_cast<int>(i));
    u_mean += u[i];
    d_mean += d[i];
  }
  u_mean /= m;
  d_mean /= m;
  double suu = 0.0;
  double sud = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    suu += (u[i] - u_mean) * (u[i] - u_mean);
    sud += (u[i] - u_mean) * (d[i] - d_mean);
  }
  LinearPart lp;
  if (suu > 1e-300 && sud > 0.0) {
    lp.eps = sud / suu;
    lp.b = d_mean - lp.eps * u_mean;
  } else {
    lp.eps = 0.0;
    lp.b = d_mean;
  }
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double r = d[i] - (lp.eps * u[i] + lp.b);
    lp.sse += r * r;
  }
  return lp;
}

ExpFit fit_exponential(std::span<const double> d, int start_index, const FitOptions& options) {
  if (d.size() < 3) throw DataError("underdetermined fit");
  for (double v : d) {
    if (!std::isfinite(v) || v < 0.0) throw DataError("fit input must be finite and >= 0");
  }

  const double log_lo = std::log(options.k_min);
  const double log_hi = std::log(options.k_max);
  const int g = options.grid_points;
  std::vector<double> ks(static_cast<std::size_t>(g));
  std::vector<double> sse(ks.size());
  for (int i = 0; i < g; ++i) {
    ks[static_cast<std::size_t>(i)] = std::exp(log_lo + (log_hi - log_lo) * i / (g - 1));
    sse[static_cast<std::size_t>(i)] = project_linear(d, start_index, ks[static_cast<std::size_t>(i)]).sse;
  }

  double best_k = ks[0];
  double best_sse = sse[0];
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (sse[i] < best_sse) {
      best_sse = sse[i];
      best_k = ks[i];
    }
  }

  auto objective = [&](double k) { return project_linear(d, start_index, k).sse; };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const bool left_ok = i == 0 || sse[i] <= sse[i - 1];
    const bool right_ok = i + 1 == ks.size() || sse[i] <= sse[i + 1];
    if (!left_ok || !right_ok) continue;
    double a = i == 0 ? options.k_min : ks[i - 1];
    double b = i + 1 == ks.size() ? options.k_max : ks[i + 1];
    double c = b - inv_phi * (b - a);
    double e = a + inv_phi * (b - a);
    double fc = objective(c);
    double fe = objective(e);
    while (b - a > options.k_tolerance) {
      if (fc < fe) {
        b = e;
        e = c;
        fe = fc;
        c = b - inv_phi * (b - a);
        fc = objective(c);
      } else {
        a = c;
        c = e;
        fc = fe;
        e = a + inv_phi * (b - a);
        fe = objective(e);
      }
    }
    const double k = 0.5 * (a + b);
    const double fk = objective(k);
    if (fk < best_sse) {
      best_sse = fk;
      best_k = k;
    }
  }

  ExpFit fit;
  fit.start_index = start_index;
  LinearPart lp = project_linear(d, start_index, best_k);
  if (lp.eps == 0.0) {
    best_k = 1.0;
    lp = project_linear(d, start_index, 1.0);
  }
  fit.k_hat = best_k;
  fit.eps_hat = lp.eps;
  fit.b_hat = lp.b;
  fit.objective = lp.sse;

  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(d.size());
  double sst = 0.0;
  for (double v : d) sst += (v - mean) * (v - mean);
  fit.r_squared = sst > 0.0 ? 1.0 - lp.sse / sst : (lp.sse == 0.0 ? 1.0 : 0.0);
  return fit;
}

FeatureVector FeatureVector::from_values(std::span<const double> v) {
  if (v.size() != kFeatureCount) throw DataError("feature vector needs 5 values");
  return FeatureVector{v[0], v[1], v[2], v[3], v[4]};
}

TraceFeatures extract_features(const CycleTrace& trace, const FitOptions& options) {
  if (trace.n_cycles < 3 || trace.dy.size() < 3 || trace.dx.size() < 4) {
    throw DataError("feature extraction needs at least 3 cycles");
  }
  TraceFeatures tf;
  tf.fit_y = fit_exponential(trace.dy, 1, options);
  tf.fit_x = fit_exponential(std::span<const double>(trace.dx).subspan(1), 2, options);
  tf.features = FeatureVector{tf.fit_x.eps_hat, tf.fit_y.eps_hat, tf.fit_x.b_hat, tf.fit_y.b_hat,
                              trace.dx[0]};
  return tf;
}

std::string features_csv(const std::vector<FeatureRow>& rows) {
  const bool with_eps0 = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.eps0.has_value(); });
  std::ostringstream os;
  os << "eps_x,eps_y,b_x,b_y,dx1,label";
  if (with_eps0) os << ",eps0";
  os << '\n';
  for (const auto& r : rows) {
    for (double v : r.features.values()) os << fmt_num(v) << ',';
    if (r.label) os << *r.label;
    if (with_eps0) {
      os << ',';
      if (r.eps0) os << fmt_num(*r.eps0);
    }
    os << '\n';
  }
  return os.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw DataError("bad number in feature CSV: " + s);
    return v;
  } catch (const std::logic_error&) {
    throw DataError("bad number in feature CSV: " + s);
  }
}

}  // namespace

std::vector<FeatureRow> parse_features_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty feature CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  const std::vector<std::string> expected = {"eps_x", "eps_y", "b_x", "b_y", "dx1", "label"};
  if (header.size() < expected.size() || !std::equal(expected.begin(), expected.end(), header.begin())) {
    throw DataError("feature CSV header must start with eps_x,eps_y,b_x,b_y,dx1,label");
  }
  const bool with_eps0 = header.size() > 6 && header[6] == "eps0";
  std::vector<FeatureRow> rows;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < 6) throw DataError("short feature CSV row: " + line);
    FeatureRow row;
    std::array<double, kFeatureCount> v{};
    for (std::size_t i = 0; i < kFeatureCount; ++i) v[i] = parse_double(cells[i]);
    row.features = FeatureVector::from_values(v);
    if (!cells[5].empty()) {
      const double lab = parse_double(cells[5]);
      if (lab != 0.0 && lab != 1.0) throw DataError("feature CSV label must be 0 or 1");
      row.label = static_cast<int>(lab);
    }
    if (with_eps0 && cells.size() > 6 && !cells[6].empty()) row.eps0 = parse_double(cells[6]);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace cycleuq
