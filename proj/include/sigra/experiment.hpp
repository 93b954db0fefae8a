#pragma once

// Experiment description files, results CSV I/O and aggregation.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <atomic>
#include <tuple>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "sigra/arp_sim.hpp"

namespace sigra {

// ---------------------------------------------------------------------------
// Config files: flat `key = value` lines, `#` comments.

struct ExperimentSpec {
  SimConfig base;
  std::vector<double> sweep_arrivals;  // N values; empty means base.arrivals
  std::vector<Scheme> schemes{Scheme::signature};
  std::string results_path;
  std::string trace_path;
  bool seed_set = false;

  std::vector<double> arrivals_values() const {
    return sweep_arrivals.empty() ? std::vector<double>{base.arrivals} : sweep_arrivals;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(std::string_view s, std::string_view key) {
  const std::string str = trim(s);
  try {
    std::size_t pos = 0;
    const double v = std::stod(str, &pos);
    if (pos == str.size()) return v;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("bad number '" + str + "' for " + std::string(key));
}

inline std::uint64_t parse_uint(std::string_view s, std::string_view key) {
  const std::string str = trim(s);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(str.data(), str.data() + str.size(), v);
  if (ec != std::errc{} || ptr != str.data() + str.size() || str.empty())
    throw std::invalid_argument("bad integer '" + str + "' for " + std::string(key));
  return v;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Shortest decimal that round-trips, so re-serialization is stable.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

// Applies one setting. Unknown keys are rejected.
inline void apply_setting(ExperimentSpec& spec, std::string_view key, std::string_view value) {
  using namespace detail;
  auto& c = spec.base;
  const std::string k(key);
  if (k == "T") c.population = parse_uint(value, k);
  else if (k == "N") {
    spec.sweep_arrivals.clear();
    for (const auto& item : split(value, ',')) spec.sweep_arrivals.push_back(parse_double(item, k));
    if (spec.sweep_arrivals.size() == 1) {
      c.arrivals = spec.sweep_arrivals.front();
      spec.sweep_arrivals.clear();
    } else if (!spec.sweep_arrivals.empty()) {
      c.arrivals = spec.sweep_arrivals.front();
    }
  }
  else if (k == "M") c.preambles = parse_uint(value, k);
  else if (k == "G") c.target_goodput = parse_double(value, k);
  else if (k == "pd" || k == "pf") {
    const double v = parse_double(value, k);
    c.channel = k == "pd" ? ChannelParams(v, c.channel.p_false_alarm())
                          : ChannelParams(c.channel.p_detect(), v);
  }
  else if (k == "rao_period_ms") c.rao_period_ms = parse_double(value, k);
  else if (k == "backoff_window_ms") c.backoff_window_ms = parse_double(value, k);
  else if (k == "max_attempts") c.max_attempts = parse_uint(value, k);
  else if (k == "payload_bytes") c.payload_bytes = parse_uint(value, k);
  else if (k == "rar_window_ms") c.timing.rar_window_ms = parse_double(value, k);
  else if (k == "processing_delay_ms") c.timing.processing_delay_ms = parse_double(value, k);
  else if (k == "grant_to_data_ms") c.timing.grant_to_data_ms = parse_double(value, k);
  else if (k == "mixer") c.mixer = parse_mixer_mode(trim(value));
  else if (k == "replications") c.replications = parse_uint(value, k);
  else if (k == "seed") {
    c.seed = parse_uint(value, k);
    spec.seed_set = true;
  }
  else if (k == "schemes") {
    spec.schemes.clear();
    for (const auto& item : split(value, ',')) spec.schemes.push_back(parse_scheme(item));
    if (spec.schemes.empty()) throw std::invalid_argument("schemes list is empty");
  }
  else if (k == "results") spec.results_path = trim(value);
  else if (k == "trace") spec.trace_path = trim(value);
  else throw std::invalid_argument("unknown config key '" + k + "'");
}

inline ExperimentSpec parse_config(std::istream& is, ExperimentSpec spec = {}) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    try {
      apply_setting(spec, detail::trim(std::string_view(t).substr(0, eq)),
                    std::string_view(t).substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return spec;
}

inline void write_config(std::ostream& os, const ExperimentSpec& spec) {
  using detail::format_double;
  const auto& c = spec.base;
  os << "T = " << c.population << '\n';
  os << "N = ";
  const auto ns = spec.arrivals_values();
  for (std::size_t i = 0; i < ns.size(); ++i) os << (i ? "," : "") << format_double(ns[i]);
  os << '\n';
  os << "M = " << c.preambles << '\n';
  os << "G = " << format_double(c.target_goodput) << '\n';
  os << "pd = " << format_double(c.channel.p_detect()) << '\n';
  os << "pf = " << format_double(c.channel.p_false_alarm()) << '\n';
  os << "rao_period_ms = " << format_double(c.rao_period_ms) << '\n';
  os << "backoff_window_ms = " << format_double(c.backoff_window_ms) << '\n';
  os << "max_attempts = " << c.max_attempts << '\n';
  os << "payload_bytes = " << c.payload_bytes << '\n';
  os << "rar_window_ms = " << format_double(c.timing.rar_window_ms) << '\n';
  os << "processing_delay_ms = " << format_double(c.timing.processing_delay_ms) << '\n';
  os << "grant_to_data_ms = " << format_double(c.timing.grant_to_data_ms) << '\n';
  os << "mixer = " << to_string(c.mixer) << '\n';
  os << "replications = " << c.replications << '\n';
  if (spec.seed_set) os << "seed = " << c.seed << '\n';
  os << "schemes = ";
  for (std::size_t i = 0; i < spec.schemes.size(); ++i)
    os << (i ? "," : "") << to_string(spec.schemes[i]);
  os << '\n';
  if (!spec.results_path.empty()) os << "results = " << spec.results_path << '\n';
  if (!spec.trace_path.empty()) os << "trace = " << spec.trace_path << '\n';
}

// ---------------------------------------------------------------------------
// Results CSV

inline constexpr std::string_view kResultsHeader =
    "scheme,N,T,M,K,L,seed,goodput,det_prob,mean_step1_ms,mean_final_ms,false_positives,arrivals";

struct ResultRow {
  Scheme scheme = Scheme::signature;
  double arrivals_mean = 0;  // N
  std::size_t population = 0;
  std::size_t preambles = 0;
  std::size_t weight = 0;
  std::size_t length = 0;
  std::uint64_t seed = 0;
  std::optional<double> goodput;
  std::optional<double> det_prob;
  std::optional<double> mean_step1_ms;
  std::optional<double> mean_final_ms;
  std::size_t false_positives = 0;
  std::size_t arrivals = 0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

inline ResultRow make_row(const SimConfig& cfg, std::uint64_t rep_seed, const RunMetrics& m) {
  ResultRow r;
  r.scheme = cfg.scheme;
  r.arrivals_mean = cfg.arrivals;
  r.population = cfg.population;
  r.preambles = cfg.preambles;
  r.weight = m.dims.weight;
  r.length = m.dims.length;
  r.seed = rep_seed;
  r.goodput = m.goodput;
  r.det_prob = m.detection_prob;
  r.mean_step1_ms = m.mean_step1_ms;
  r.mean_final_ms = m.mean_final_ms;
  r.false_positives = m.false_positives;
  r.arrivals = m.arrivals;
  return r;
}

inline void write_row(std::ostream& os, const ResultRow& r) {
  using detail::format_double;
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  os << to_string(r.scheme) << ',' << format_double(r.arrivals_mean) << ',' << r.population << ','
     << r.preambles << ',' << r.weight << ',' << r.length << ',' << r.seed << ',' << opt(r.goodput)
     << ',' << opt(r.det_prob) << ',' << opt(r.mean_step1_ms) << ',' << opt(r.mean_final_ms) << ','
     << r.false_positives << ',' << r.arrivals << '\n';
}

inline ResultRow parse_row(std::string_view line) {
  using namespace detail;
  const auto f = split(line, ',');
  if (f.size() != 13)
    throw std::invalid_argument("expected 13 fields, got " + std::to_string(f.size()));
  auto opt = [](const std::string& s, std::string_view key) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return parse_double(s, key);
  };
  ResultRow r;
  r.scheme = parse_scheme(f[0]);
  r.arrivals_mean = parse_double(f[1], "N");
  r.population = parse_uint(f[2], "T");
  r.preambles = parse_uint(f[3], "M");
  r.weight = parse_uint(f[4], "K");
  r.length = parse_uint(f[5], "L");
  r.seed = parse_uint(f[6], "seed");
  r.goodput = opt(f[7], "goodput");
  r.det_prob = opt(f[8], "det_prob");
  r.mean_step1_ms = opt(f[9], "mean_step1_ms");
  r.mean_final_ms = opt(f[10], "mean_final_ms");
  r.false_positives = parse_uint(f[11], "false_positives");
  r.arrivals = parse_uint(f[12], "arrivals");
  return r;
}

// Malformed input, with every offending line listed.
class MalformedResults : public std::runtime_error {
 public:
  explicit MalformedResults(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s = "malformed results:";
    for (const auto& x : p) s += "\n  " + x;
    return s;
  }
  std::vector<std::string> problems_;
};

inline std::vector<ResultRow> read_results(std::istream& is) {
  std::string line;
  std::vector<std::string> problems;
  if (!std::getline(is, line) || detail::trim(line) != kResultsHeader)
    throw MalformedResults({"line 1: missing or unexpected header"});
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    try {
      rows.push_back(parse_row(detail::trim(line)));
    } catch (const std::invalid_argument& e) {
      problems.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!problems.empty()) throw MalformedResults(std::move(problems));
  return rows;
}

// ---------------------------------------------------------------------------
// Aggregation

struct Estimate {
  std::size_t n = 0;
  double mean = 0;
  std::optional<double> ci95;  // half-width, needs n >= 2
};

// Mean with a Student-t 95% confidence half-width. Absent samples are skipped.
inline Estimate estimate(const std::vector<std::optional<double>>& samples) {
  std::vector<double> v;
  for (const auto& s : samples)
    if (s) v.push_back(*s);
  Estimate e;
  e.n = v.size();
  if (v.empty()) return e;
  // Sort so the sum does not depend on input order.
  std::sort(v.begin(), v.end());
  double sum = 0;
  for (double x : v) sum += x;
  e.mean = sum / static_cast<double>(v.size());
  if (v.size() >= 2) {
    double ss = 0;
    for (double x : v) ss += (x - e.mean) * (x - e.mean);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    boost::math::students_t dist(static_cast<double>(v.size() - 1));
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    e.ci95 = t * sd / std::sqrt(static_cast<double>(v.size()));
  }
  return e;
}

struct SummaryRow {
  Scheme scheme = Scheme::signature;
  double arrivals_mean = 0;
  std::size_t replications = 0;
  Estimate goodput, det_prob, step1_ms, final_ms, false_positives, arrivals;
};

inline std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::map<std::tuple<int, double>, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) groups[{static_cast<int>(r.scheme), r.arrivals_mean}].push_back(&r);
  std::vector<SummaryRow> out;
  for (const auto& [key, members] : groups) {
    SummaryRow s;
    s.scheme = static_cast<Scheme>(std::get<0>(key));
    s.arrivals_mean = std::get<1>(key);
    s.replications = members.size();
    std::vector<std::optional<double>> g, d, s1, fin, fp, na;
    for (const auto* r : members) {
      g.push_back(r->goodput);
      d.push_back(r->det_prob);
      s1.push_back(r->mean_step1_ms);
      fin.push_back(r->mean_final_ms);
      fp.push_back(static_cast<double>(r->false_positives));
      na.push_back(static_cast<double>(r->arrivals));
    }
    s.goodput = estimate(g);
    s.det_prob = estimate(d);
    s.step1_ms = estimate(s1);
    s.final_ms = estimate(fin);
    s.false_positives = estimate(fp);
    s.arrivals = estimate(na);
    out.push_back(s);
  }
  return out;
}

inline constexpr std::string_view kSummaryHeader =
    "scheme,N,reps,goodput_mean,goodput_ci95,det_prob_mean,det_prob_ci95,step1_mean_ms,"
    "step1_ci95_ms,final_mean_ms,final_ci95_ms,false_positives_mean,arrivals_mean";

inline void write_summary(std::ostream& os, const std::vector<SummaryRow>& rows) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  auto mean = [&](const Estimate& e) { return e.n ? num(e.mean) : std::string(); };
  auto ci = [&](const Estimate& e) { return e.ci95 ? num(*e.ci95) : std::string(); };
  os << kSummaryHeader << '\n';
  for (const auto& s : rows) {
    os << to_string(s.scheme) << ',' << detail::format_double(s.arrivals_mean) << ','
       << s.replications << ',' << mean(s.goodput) << ',' << ci(s.goodput) << ','
       << mean(s.det_prob) << ',' << ci(s.det_prob) << ',' << mean(s.step1_ms) << ','
       << ci(s.step1_ms) << ',' << mean(s.final_ms) << ',' << ci(s.final_ms) << ','
       << mean(s.false_positives) << ',' << mean(s.arrivals) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Sweep execution

struct SweepOutput {
  std::vector<ResultRow> rows;  // (N, scheme, replication) order
  DecodeTrace first_trace;      // signature scheme, first N, replication 0
};

// Runs every (N, scheme, replication) combination. Replications of a point run
// on `threads` workers; rows come back in deterministic order regardless.
inline SweepOutput run_sweep(const ExperimentSpec& spec, unsigned threads = 1) {
  SweepOutput out;
  bool have_trace = false;
  for (double n : spec.arrivals_values()) {
    for (Scheme scheme : spec.schemes) {
      SimConfig cfg = spec.base;
      cfg.arrivals = n;
      cfg.scheme = scheme;
      const SweepPoint sp = prepare_sweep_point(cfg);
      const std::size_t reps = cfg.replications;
      std::vector<RunMetrics> metrics(reps);
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        for (std::size_t r; (r = next.fetch_add(1)) < reps;)
          metrics[r] = run_replication(sp, replication_seed(cfg.seed, r));
      };
      const unsigned nthreads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(reps)));
      if (nthreads == 1) {
        worker();
      } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < nthreads; ++i) pool.emplace_back(worker);
      }
      for (std::size_t r = 0; r < reps; ++r)
        out.rows.push_back(make_row(cfg, replication_seed(cfg.seed, r), metrics[r]));
      if (!have_trace && scheme == Scheme::signature) {
        out.first_trace = metrics.front().trace;
        have_trace = true;
      }
    }
  }
  return out;
}

}  // namespace sigra
