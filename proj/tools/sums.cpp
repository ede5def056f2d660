// Command-line front end: simulate / fit / summarize.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "sums/io.hpp"
#include "sums/posterior.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct SimulateArgs {
  std::string preset = "sm4";
  std::string out;
  std::uint64_t seed = 1;
  int n_subjects = 0;  // 0: preset default
  double missing_rate = 0.0;
  int missing_process = 1;
};

int run_simulate(const SimulateArgs& args) {
  if (args.preset != "sm4")
    throw sums::ValidationError("unknown preset '" + args.preset + "' (available: sm4)");
  sums::SimScenario scenario = sums::SimScenario::sm4_preset();
  if (args.n_subjects > 0) scenario.n_subjects = args.n_subjects;
  scenario.missing_rate = args.missing_rate;
  scenario.missing_process = args.missing_process - 1;
  fs::create_directories(args.out);
  sums::Rng rng(args.seed);
  const sums::SimResult sim = sums::gen_panel(scenario, rng);
  sums::write_dataset(args.out, sim);
  std::cerr << "simulated " << sim.data.n_subjects() << " subjects, "
            << sim.data.design().n_processes() << " processes -> " << args.out << "\n";
  return 0;
}

struct FitArgs {
  std::string data_dir;
  std::string config_path;
  std::string out;
  int chains = 1;
  long seed_override = -1;
  std::string fixed_partition;
  bool quiet = false;
};

std::vector<int> canonical_labels(const std::vector<int>& alloc) {
  std::vector<int> out(alloc.size());
  std::map<int, int> relabel;
  for (std::size_t i = 0; i < alloc.size(); ++i) {
    const auto [it, _] = relabel.emplace(alloc[i], static_cast<int>(relabel.size()));
    out[i] = it->second;
  }
  return out;
}

int run_fit(const FitArgs& args) {
  const auto t0 = std::chrono::steady_clock::now();
  sums::CliConfig config = sums::parse_config_file(args.config_path);
  if (args.seed_override >= 0) config.chain.seed = static_cast<std::uint64_t>(args.seed_override);
  if (args.chains < 1) throw sums::ValidationError("--chains must be >= 1");

  const sums::LoadedData loaded = sums::load_dataset(args.data_dir, config.standardize);
  fs::create_directories(args.out);

  std::optional<std::vector<int>> partition;
  if (!args.fixed_partition.empty()) {
    std::ifstream in(args.fixed_partition);
    if (!in) throw sums::ValidationError("cannot open " + args.fixed_partition);
    json pj;
    in >> pj;
    std::vector<int> alloc;
    for (const auto& a : pj.at("allocations")) alloc.push_back(a.get<int>() - 1);
    if (static_cast<int>(alloc.size()) != loaded.data.n_subjects())
      throw sums::ValidationError("fixed partition length does not match the dataset");
    partition = canonical_labels(alloc);
  }

  // manifest goes out before any sampling starts
  json manifest =
      sums::make_manifest(config, config.chain.seed, args.chains, args.data_dir, loaded);
  if (partition) manifest["fixed_partition"] = true;
  sums::write_json_atomic(manifest, args.out + "/manifest.json");

  std::vector<std::string> failures(args.chains);
  std::vector<std::thread> workers;
  for (int k = 0; k < args.chains; ++k) {
    workers.emplace_back([&, k] {
      sums::ChainConfig chain_config = config.chain;
      chain_config.seed = sums::chain_seed(config.chain.seed, k);
      sums::Sampler sampler(loaded.data, chain_config);
      if (partition) sampler.freeze_partition(*partition);
      sums::Rng rng(chain_config.seed);
      const std::string path = args.out + "/samples_chain" + std::to_string(k) + ".jsonl";
      std::ofstream out(path);
      if (!out) {
        failures[k] = "cannot write " + path;
        return;
      }
      auto on_sample = [&](const sums::SampleRecord& rec) {
        out << sums::record_to_json(rec, loaded.x_transforms, loaded.z_transforms).dump()
            << '\n';
      };
      try {
        sampler.run(rng, (k == 0 && !args.quiet) ? &std::cerr : nullptr, on_sample);
      } catch (const sums::NumericalError& err) {
        const std::string dump = args.out + "/state_dump_chain" + std::to_string(k) + ".json";
        try {
          sums::write_json_atomic(
              sums::record_to_json(sampler.make_record(), loaded.x_transforms,
                                   loaded.z_transforms),
              dump);
          failures[k] = std::string(err.what()) + " (state dump: " + dump + ")";
        } catch (...) {
          failures[k] = err.what();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  for (int k = 0; k < args.chains; ++k)
    if (!failures[k].empty())
      throw sums::NumericalError("chain " + std::to_string(k) + ": " + failures[k]);
  const auto dt =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
  std::cerr << "fit finished in " << dt.count() / 1000.0 << " s -> " << args.out << "\n";
  return 0;
}

struct SummarizeArgs {
  std::string samples_dir;
  std::string out;
  bool bf_normal = false;
};

int run_summarize(const SummarizeArgs& args) {
  // manifest provides the design metadata and covariate transforms
  const std::string manifest_path = args.samples_dir + "/manifest.json";
  std::ifstream min(manifest_path);
  if (!min) throw sums::ValidationError("cannot open " + manifest_path);
  json manifest;
  min >> manifest;

  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(args.samples_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("samples_chain", 0) == 0 && name.size() > 6 &&
        name.substr(name.size() - 6) == ".jsonl")
      files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw sums::ValidationError("no samples files in " + args.samples_dir);

  sums::PosteriorChain chain;
  for (const auto& f : files) {
    sums::PosteriorChain part = sums::read_samples_file(f);
    chain.insert(chain.end(), part.begin(), part.end());
  }
  if (chain.empty()) throw sums::ValidationError("no saved iterations");

  const int n_processes = manifest.at("n_processes").get<int>();
  const int n_subjects = manifest.at("n_subjects").get<int>();
  std::vector<sums::ProcessSpec> specs;
  for (int h = 0; h < n_processes; ++h) {
    sums::ProcessSpec spec;
    spec.n_states = manifest.at("n_states")[h].get<int>();
    spec.role = manifest.at("roles")[h].get<std::string>() == "response"
                    ? sums::ProcessRole::response
                    : sums::ProcessRole::explanatory;
    specs.push_back(spec);
  }
  const sums::StudyDesign design(specs);
  fs::create_directories(args.out);

  const Eigen::MatrixXd edge_probs = sums::edge_probabilities(chain, n_processes);
  {
    std::ofstream out(args.out + "/edge_probs.csv");
    out << "process_a,process_b,probability\n";
    for (int h = 0; h < n_processes; ++h)
      for (int k = h + 1; k < n_processes; ++k)
        out << h + 1 << ',' << k + 1 << ',' << sums::format_double(edge_probs(h, k)) << '\n';
  }

  const Eigen::MatrixXd coclust = sums::coclustering_matrix(chain, n_subjects);
  {
    std::ofstream out(args.out + "/coclustering.csv");
    for (int i = 0; i < n_subjects; ++i) {
      for (int j = 0; j < n_subjects; ++j)
        out << (j ? "," : "") << sums::format_double(coclust(i, j));
      out << '\n';
    }
  }

  const int binder_idx = sums::binder_partition_index(chain, coclust);
  const std::vector<int> binder = chain[binder_idx].c;
  const double binder_loss_value = sums::binder_loss(binder, coclust);

  // entropy of the sampled partitions, with a central 95% interval
  std::vector<double> entropies;
  entropies.reserve(chain.size());
  for (const auto& rec : chain) entropies.push_back(sums::partition_entropy(rec.c));

  std::vector<int> k_n_values, m_values;
  for (const auto& rec : chain) {
    k_n_values.push_back(rec.k_n);
    m_values.push_back(rec.n_components);
  }

  // Savage-Dickey table; the prior sd of a coefficient reported on the
  // original covariate scale is 1/scale (identity prior covariance on the
  // standardized scale)
  {
    std::ofstream out(args.out + "/bf_table.csv");
    out << "process,covariate,transition,neg_log10_bf\n";
    if (chain.size() >= 500) {
      const auto x_names = manifest.at("x_names").get<std::vector<std::string>>();
      for (int h = 0; h < n_processes; ++h) {
        const Eigen::MatrixXd& b0 = chain.front().beta[h];
        for (int j = 0; j < b0.rows(); ++j) {
          const double scale = manifest.at("x_transforms").contains(x_names[j])
                                   ? manifest.at("x_transforms")[x_names[j]][1].get<double>()
                                   : 1.0;
          for (int col = 0; col < b0.cols(); ++col) {
            std::vector<double> draws;
            draws.reserve(chain.size());
            for (const auto& rec : chain) draws.push_back(rec.beta[h](j, col));
            const auto [proc, r, s] = design.rate_coords(design.rate_offset(h) + col);
            const sums::SavageDickey sd =
                sums::savage_dickey_bf(draws, 1.0 / scale, args.bf_normal);
            out << h + 1 << ',' << x_names[j] << ',' << r + 1 << "->" << s + 1 << ','
                << sums::format_double(sd.neg_log10_bf) << '\n';
            (void)proc;
          }
        }
        const Eigen::MatrixXd& g0m = chain.front().gamma[h];
        const auto z_names = manifest.at("z_names")[h].get<std::vector<std::string>>();
        for (int j = 0; j < g0m.rows(); ++j) {
          const double scale = manifest.at("z_transforms")[h].contains(z_names[j])
                                   ? manifest.at("z_transforms")[h][z_names[j]][1].get<double>()
                                   : 1.0;
          for (int col = 0; col < g0m.cols(); ++col) {
            std::vector<double> draws;
            draws.reserve(chain.size());
            for (const auto& rec : chain) draws.push_back(rec.gamma[h](j, col));
            const auto [proc, r, s] = design.rate_coords(design.rate_offset(h) + col);
            const sums::SavageDickey sd =
                sums::savage_dickey_bf(draws, 1.0 / scale, args.bf_normal);
            out << h + 1 << ',' << z_names[j] << ',' << r + 1 << "->" << s + 1 << ','
                << sums::format_double(sd.neg_log10_bf) << '\n';
            (void)proc;
          }
        }
      }
    }
  }

  // per-cluster log-baseline rates: within-cluster subject average per saved
  // iteration, summarized over iterations
  {
    std::ofstream out(args.out + "/phi_by_cluster.csv");
    out << "cluster,process,transition,mean,lo95,hi95\n";
    int n_clusters = 0;
    for (int c : binder) n_clusters = std::max(n_clusters, c + 1);
    const int dp = design.total_rates();
    for (int cl = 0; cl < n_clusters; ++cl) {
      std::vector<int> members;
      for (int i = 0; i < n_subjects; ++i)
        if (binder[i] == cl) members.push_back(i);
      for (int coord = 0; coord < dp; ++coord) {
        std::vector<double> avgs;
        avgs.reserve(chain.size());
        for (const auto& rec : chain) {
          double acc = 0.0;
          for (int i : members) acc += rec.phi_star[rec.c[i]][coord];
          avgs.push_back(acc / members.size());
        }
        double mean = 0.0;
        for (double v : avgs) mean += v;
        mean /= avgs.size();
        const auto [h, r, s] = design.rate_coords(coord);
        out << cl + 1 << ',' << h + 1 << ',' << r + 1 << "->" << s + 1 << ','
            << sums::format_double(mean) << ',' << sums::format_double(sums::quantile(avgs, 0.025))
            << ',' << sums::format_double(sums::quantile(avgs, 0.975)) << '\n';
      }
    }
  }

  json summary;
  summary["n_samples"] = chain.size();
  summary["n_chains"] = files.size();
  json median_edges = json::array();
  for (const auto& [h, k] : sums::median_graph(edge_probs)) median_edges.push_back({h + 1, k + 1});
  summary["median_graph"] = median_edges;
  json ep = json::array();
  for (int h = 0; h < n_processes; ++h)
    for (int k = h + 1; k < n_processes; ++k)
      ep.push_back({{"process_a", h + 1}, {"process_b", k + 1}, {"probability", edge_probs(h, k)}});
  summary["edge_probabilities"] = ep;
  json balloc = json::array();
  for (int c : binder) balloc.push_back(c + 1);
  int binder_clusters = 0;
  for (int c : binder) binder_clusters = std::max(binder_clusters, c + 1);
  summary["binder"] = {{"allocations", balloc},
                       {"n_clusters", binder_clusters},
                       {"loss", binder_loss_value},
                       {"iter", chain[binder_idx].iter}};
  summary["entropy"] = {{"median", sums::quantile(entropies, 0.5)},
                        {"lo95", sums::quantile(entropies, 0.025)},
                        {"hi95", sums::quantile(entropies, 0.975)}};
  json knt = json::object(), mt = json::object();
  for (const auto& [v, f] : sums::frequency_table(k_n_values)) knt[std::to_string(v)] = f;
  for (const auto& [v, f] : sums::frequency_table(m_values)) mt[std::to_string(v)] = f;
  summary["k_n_table"] = knt;
  summary["m_table"] = mt;
  sums::write_json_atomic(summary, args.out + "/summary.json");
  std::cerr << "summary -> " << args.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint Bayesian inference for seemingly unrelated multi-state processes"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "generate a ground-truth dataset");
  sim->add_option("--preset", sim_args.preset, "scenario preset (sm4)");
  sim->add_option("--out", sim_args.out, "output directory")->required();
  sim->add_option("--seed", sim_args.seed, "random seed");
  sim->add_option("--n", sim_args.n_subjects, "override the subject count");
  sim->add_option("--missing-rate", sim_args.missing_rate,
                  "share of subjects with a masked first observation");
  sim->add_option("--missing-process", sim_args.missing_process,
                  "1-based process whose first observation is masked");

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit", "run the MCMC sampler");
  fit->add_option("--data", fit_args.data_dir, "dataset directory")->required();
  fit->add_option("--config", fit_args.config_path, "config file")->required();
  fit->add_option("--out", fit_args.out, "output directory")->required();
  fit->add_option("--chains", fit_args.chains, "number of independent chains");
  fit->add_option("--seed", fit_args.seed_override, "override the config seed");
  fit->add_option("--fixed-partition", fit_args.fixed_partition,
                  "JSON file with 1-based allocations; freezes the partition");
  fit->add_flag("--quiet", fit_args.quiet, "suppress progress output");

  SummarizeArgs sum_args;
  CLI::App* summ = app.add_subcommand("summarize", "posterior summaries from saved samples");
  summ->add_option("--samples", sum_args.samples_dir, "directory with samples files")->required();
  summ->add_option("--out", sum_args.out, "output directory")->required();
  summ->add_flag("--bf-normal-approx", sum_args.bf_normal,
                 "normal approximation instead of kernel density for Bayes factors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) return run_simulate(sim_args);
    if (fit->parsed()) return run_fit(fit_args);
    if (summ->parsed()) return run_summarize(sum_args);
  } catch (const sums::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const sums::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
