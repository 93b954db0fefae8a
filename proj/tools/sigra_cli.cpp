// sigra: dimensioning queries, simulation sweeps and result reports.
//
// Exit codes: 0 success, 1 invalid input, 2 infeasible dimensioning, 3 I/O.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "sigra/sigra.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kInfeasible = 2;
constexpr int kIo = 3;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Relative output paths land under $SIGRA_OUTPUT_DIR when it is set.
std::filesystem::path output_path(const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative()) {
    if (const char* dir = std::getenv("SIGRA_OUTPUT_DIR"); dir && *dir)
      return std::filesystem::path(dir) / path;
  }
  return path;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << contents;
  if (!os.flush()) throw IoError("write to " + path.string() + " failed");
}

int cmd_dimension(double n, std::size_t t, std::size_t m, double g, double pd, double pf) {
  sigra::DimensioningInput in;
  in.arrivals = n;
  in.population = t;
  in.preambles = m;
  in.target_goodput = g;
  in.channel = sigra::ChannelParams(pd, pf);
  const auto res = sigra::dimension(in);
  std::printf("signature weight K        %zu\n", res.weight);
  std::printf("frame length L            %zu RAOs\n", res.length);
  std::printf("target p_fa               %.6g\n", res.p_fa_target);
  std::printf("predicted p_fa            %.6g\n", res.p_fa_predicted);
  std::printf("predicted goodput         %.6g\n", res.goodput_predicted);
  std::printf("expected false positives  %.6g\n",
              sigra::expected_false_positives(n, static_cast<double>(t), res.p_fa_predicted));
  std::printf("fixed-point iterations    %zu\n", res.iterations);
  std::printf("K=%zu L=%zu p_fa_target=%.10g p_fa_predicted=%.10g goodput_predicted=%.10g "
              "iterations=%zu\n",
              res.weight, res.length, res.p_fa_target, res.p_fa_predicted,
              res.goodput_predicted, res.iterations);
  return kOk;
}

int cmd_simulate(sigra::ExperimentSpec spec, unsigned threads) {
  if (!spec.seed_set) {
    std::cerr << "simulate: a master seed is required (seed = ... in the config or --seed)\n";
    return kInvalid;
  }
  for (double n : spec.arrivals_values()) {
    sigra::SimConfig c = spec.base;
    c.arrivals = n;
    c.validate();
  }
  const auto out = sigra::run_sweep(spec, threads);

  std::ostringstream csv;
  csv << sigra::kResultsHeader << '\n';
  for (const auto& r : out.rows) sigra::write_row(csv, r);
  if (spec.results_path.empty()) {
    std::cout << csv.str();
  } else {
    write_file(output_path(spec.results_path), csv.str());
  }
  if (!spec.trace_path.empty()) {
    if (out.first_trace.empty()) {
      std::cerr << "simulate: --trace needs the signature scheme in the sweep\n";
      return kInvalid;
    }
    std::ostringstream tr;
    sigra::write_trace_csv(tr, out.first_trace);
    write_file(output_path(spec.trace_path), tr.str());
  }
  return kOk;
}

int cmd_report(const std::string& in_path, const std::string& out_path) {
  std::ifstream is(in_path, std::ios::binary);
  if (!is) throw IoError("cannot open " + in_path);
  const auto rows = sigra::read_results(is);
  std::ostringstream os;
  sigra::write_summary(os, sigra::summarize(rows));
  if (out_path.empty()) {
    std::cout << os.str();
  } else {
    write_file(output_path(out_path), os.str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signature-based random access: dimensioning, simulation and reporting"};
  app.require_subcommand(1);

  // dimension
  auto* dim = app.add_subcommand("dimension", "Compute signature weight K and frame length L");
  double d_n = 200, d_g = 0.99, d_pd = 0.99, d_pf = 1e-3;
  std::size_t d_t = 1000, d_m = 54;
  dim->add_option("--N", d_n, "Expected number of arrivals")->required();
  dim->add_option("--T", d_t, "Population size")->required();
  dim->add_option("--M", d_m, "Preambles per RAO")->capture_default_str();
  dim->add_option("--G", d_g, "Target goodput")->capture_default_str();
  dim->add_option("--pd", d_pd, "Preamble detection probability")->capture_default_str();
  dim->add_option("--pf", d_pf, "Preamble false alarm probability")->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run a simulation sweep and write the results CSV");
  std::string s_config;
  std::vector<std::pair<std::string, std::string>> overrides;
  unsigned s_threads = std::max(1u, std::thread::hardware_concurrency());
  sim->add_option("--config", s_config, "key = value experiment file")->check(CLI::ExistingFile);
  for (const char* key : {"N", "T", "M", "G", "pd", "pf", "schemes", "replications", "seed",
                          "results", "trace", "mixer", "backoff_window_ms", "max_attempts",
                          "rar_window_ms", "processing_delay_ms", "grant_to_data_ms",
                          "rao_period_ms", "payload_bytes"}) {
    sim->add_option_function<std::string>(
        std::string("--") + key,
        [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); },
        std::string("Override config key '") + key + "'");
  }
  sim->add_option("--threads", s_threads, "Worker threads for replications");

  // report
  auto* rep = app.add_subcommand("report", "Aggregate a results CSV per scheme and N");
  std::string r_in, r_out;
  rep->add_option("--in", r_in, "Results CSV")->required();
  rep->add_option("--out", r_out, "Summary CSV (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }

  try {
    if (dim->parsed()) return cmd_dimension(d_n, d_t, d_m, d_g, d_pd, d_pf);
    if (sim->parsed()) {
      sigra::ExperimentSpec spec;
      if (!s_config.empty()) {
        std::ifstream is(s_config);
        if (!is) throw IoError("cannot open " + s_config);
        spec = sigra::parse_config(is);
      }
      // Flags win over the file.
      for (const auto& [k, v] : overrides) sigra::apply_setting(spec, k, v);
      return cmd_simulate(std::move(spec), s_threads);
    }
    if (rep->parsed()) return cmd_report(r_in, r_out);
  } catch (const sigra::InfeasibleTarget& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const sigra::DimensioningDiverged& e) {
    std::cerr << "infeasible: " << e.what() << " (L trace:";
    for (auto l : e.trace()) std::cerr << ' ' << l;
    std::cerr << ")\n";
    return kInfeasible;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const sigra::MalformedResults& e) {
    std::cerr << e.what() << '\n';
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInvalid;
  }
  return kInvalid;
}
