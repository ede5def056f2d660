#include "sums/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace sums {

std::string version_string() { return "0.1.0"; }

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// SHA-256 (FIPS 180-4), self-contained
// ---------------------------------------------------------------------------

namespace {

struct Sha256 {
  std::uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                        0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
  std::uint64_t total = 0;
  unsigned char block[64];
  std::size_t fill = 0;

  static std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

  void process(const unsigned char* p) {
    static const std::uint32_t k[64] = {
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
        0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
        0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
        0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
        0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
        0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
        0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
        0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
        0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
        0xc67178f2};
    std::uint32_t w[64];
    for (int i = 0; i < 16; ++i)
      w[i] = (p[4 * i] << 24) | (p[4 * i + 1] << 16) | (p[4 * i + 2] << 8) | p[4 * i + 3];
    for (int i = 16; i < 64; ++i) {
      const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5], g = h[6],
                  hh = h[7];
    for (int i = 0; i < 64; ++i) {
      const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
      const std::uint32_t ch = (e & f) ^ (~e & g);
      const std::uint32_t t1 = hh + s1 + ch + k[i] + w[i];
      const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
      const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
      const std::uint32_t t2 = s0 + maj;
      hh = g; g = f; f = e; e = d + t1; d = c; c = b; b = a; a = t1 + t2;
    }
    h[0] += a; h[1] += b; h[2] += c; h[3] += d;
    h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
  }

  void update(const unsigned char* data, std::size_t len) {
    total += len;
    while (len > 0) {
      const std::size_t take = std::min(len, 64 - fill);
      std::memcpy(block + fill, data, take);
      fill += take;
      data += take;
      len -= take;
      if (fill == 64) {
        process(block);
        fill = 0;
      }
    }
  }

  std::string finish() {
    const std::uint64_t bits = total * 8;
    unsigned char pad = 0x80;
    update(&pad, 1);
    unsigned char zero = 0;
    while (fill != 56) update(&zero, 1);
    unsigned char len[8];
    for (int i = 0; i < 8; ++i) len[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
    update(len, 8);
    std::ostringstream out;
    for (std::uint32_t v : h) {
      char buf[9];
      std::snprintf(buf, sizeof(buf), "%08x", v);
      out << buf;
    }
    return out.str();
  }
};

}  // namespace

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file for digest: " + path);
  Sha256 sha;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    sha.update(reinterpret_cast<const unsigned char*>(buf), static_cast<std::size_t>(in.gcount()));
  return sha.finish();
}

// ---------------------------------------------------------------------------
// CSV helpers
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_double(const std::string& s, const std::string& file, int row,
                    const char* column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    std::ostringstream msg;
    msg << file << " row " << row << ": malformed " << column << " value '" << s << "'";
    throw ValidationError(msg.str());
  }
}

long parse_long(const std::string& s, const std::string& file, int row, const char* column) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    std::ostringstream msg;
    msg << file << " row " << row << ": malformed " << column << " value '" << s << "'";
    throw ValidationError(msg.str());
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void expect_header(const std::vector<std::string>& lines, const std::string& path,
                   const std::string& header) {
  if (lines.empty() || lines[0] != header)
    throw ValidationError(path + ": expected header '" + header + "'");
}

}  // namespace

// ---------------------------------------------------------------------------
// dataset ingestion
// ---------------------------------------------------------------------------

LoadedData load_dataset(const std::string& dir, bool standardize) {
  const std::string design_path = dir + "/design.json";
  std::ifstream design_in(design_path);
  if (!design_in) throw ValidationError("cannot open " + design_path);
  nlohmann::json design_json;
  try {
    design_in >> design_json;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(design_path + ": " + e.what());
  }
  if (!design_json.contains("processes") || !design_json["processes"].is_array() ||
      design_json["processes"].empty())
    throw ValidationError(design_path + ": missing non-empty 'processes' array");

  std::vector<ProcessSpec> specs;
  for (const auto& pj : design_json["processes"]) {
    ProcessSpec spec;
    spec.n_states = pj.at("n_states").get<int>();
    const std::string role = pj.at("role").get<std::string>();
    if (role == "response") spec.role = ProcessRole::response;
    else if (role == "explanatory") spec.role = ProcessRole::explanatory;
    else throw ValidationError(design_path + ": role must be 'response' or 'explanatory'");
    specs.push_back(spec);
  }
  const int p = static_cast<int>(specs.size());

  // panel.csv
  const std::string panel_path = dir + "/panel.csv";
  const auto panel_lines = read_lines(panel_path);
  expect_header(panel_lines, panel_path, "subject_id,process,time,state");
  struct Obs {
    double time;
    int state;  // -1 missing
    int row;
  };
  std::map<long, std::vector<std::vector<Obs>>> raw;  // id -> per process
  for (std::size_t r = 1; r < panel_lines.size(); ++r) {
    if (panel_lines[r].empty()) continue;
    const auto f = split_csv(panel_lines[r]);
    const int row = static_cast<int>(r) + 1;
    if (f.size() != 4)
      throw ValidationError(panel_path + " row " + std::to_string(row) + ": expected 4 fields");
    const long id = parse_long(f[0], panel_path, row, "subject_id");
    const long proc = parse_long(f[1], panel_path, row, "process");
    if (proc < 1 || proc > p)
      throw ValidationError(panel_path + " row " + std::to_string(row) + ": process out of range");
    const double time = parse_double(f[2], panel_path, row, "time");
    int state = -1;
    if (!f[3].empty()) {
      state = static_cast<int>(parse_long(f[3], panel_path, row, "state"));
      if (state < 1 || state > specs[proc - 1].n_states)
        throw ValidationError(panel_path + " row " + std::to_string(row) + ": state " +
                              std::to_string(state) + " out of range for process " +
                              std::to_string(proc));
    }
    auto& per_subject = raw.try_emplace(id, p).first->second;
    per_subject[proc - 1].push_back({time, state, row});
  }
  if (raw.empty()) throw ValidationError(panel_path + ": no observations");

  std::vector<long> ids;
  for (const auto& [id, _] : raw) ids.push_back(id);  // std::map: ascending

  // covariates.csv (optional file)
  std::vector<std::string> x_names;
  std::map<long, std::map<std::string, double>> x_raw;
  const std::string cov_path = dir + "/covariates.csv";
  if (std::ifstream probe(cov_path); probe) {
    const auto lines = read_lines(cov_path);
    expect_header(lines, cov_path, "subject_id,name,value");
    std::set<std::string> names;
    for (std::size_t r = 1; r < lines.size(); ++r) {
      if (lines[r].empty()) continue;
      const auto f = split_csv(lines[r]);
      const int row = static_cast<int>(r) + 1;
      if (f.size() != 3)
        throw ValidationError(cov_path + " row " + std::to_string(row) + ": expected 3 fields");
      const long id = parse_long(f[0], cov_path, row, "subject_id");
      const double value = parse_double(f[2], cov_path, row, "value");
      names.insert(f[1]);
      x_raw[id][f[1]] = value;
    }
    x_names.assign(names.begin(), names.end());
  }

  // covariates_tv.csv (optional file)
  std::vector<std::set<std::string>> z_name_sets(p);
  std::map<long, std::vector<std::map<std::string, std::map<double, double>>>> z_raw;
  const std::string tv_path = dir + "/covariates_tv.csv";
  if (std::ifstream probe(tv_path); probe) {
    const auto lines = read_lines(tv_path);
    expect_header(lines, tv_path, "subject_id,process,time,name,value");
    for (std::size_t r = 1; r < lines.size(); ++r) {
      if (lines[r].empty()) continue;
      const auto f = split_csv(lines[r]);
      const int row = static_cast<int>(r) + 1;
      if (f.size() != 5)
        throw ValidationError(tv_path + " row " + std::to_string(row) + ": expected 5 fields");
      const long id = parse_long(f[0], tv_path, row, "subject_id");
      const long proc = parse_long(f[1], tv_path, row, "process");
      if (proc < 1 || proc > p)
        throw ValidationError(tv_path + " row " + std::to_string(row) + ": process out of range");
      const double time = parse_double(f[2], tv_path, row, "time");
      const double value = parse_double(f[4], tv_path, row, "value");
      z_name_sets[proc - 1].insert(f[3]);
      auto& per_subject = z_raw.try_emplace(id, p).first->second;
      per_subject[proc - 1][f[3]][time] = value;
    }
  }
  std::vector<std::vector<std::string>> z_names(p);
  for (int h = 0; h < p; ++h) z_names[h].assign(z_name_sets[h].begin(), z_name_sets[h].end());

  for (int h = 0; h < p; ++h) {
    specs[h].n_x = specs[h].role == ProcessRole::response ? static_cast<int>(x_names.size()) : 0;
    specs[h].n_z = static_cast<int>(z_names[h].size());
  }
  StudyDesign design(specs);

  // assemble subjects
  std::vector<Subject> subjects;
  subjects.reserve(ids.size());
  for (long id : ids) {
    Subject subj;
    subj.x = Eigen::VectorXd::Zero(x_names.size());
    for (std::size_t j = 0; j < x_names.size(); ++j) {
      const auto it = x_raw.find(id);
      if (it == x_raw.end() || !it->second.count(x_names[j]))
        throw ValidationError(cov_path + ": subject " + std::to_string(id) +
                              " is missing covariate '" + x_names[j] + "'");
      subj.x[j] = it->second.at(x_names[j]);
    }
    subj.series.resize(p);
    auto& per_subject = raw.at(id);
    for (int h = 0; h < p; ++h) {
      auto obs = per_subject[h];
      if (obs.size() < 2)
        throw ValidationError(panel_path + ": subject " + std::to_string(id) + ", process " +
                              std::to_string(h + 1) + " needs at least two observations");
      std::stable_sort(obs.begin(), obs.end(),
                       [](const Obs& a, const Obs& b) { return a.time < b.time; });
      ProcessSeries& s = subj.series[h];
      for (std::size_t j = 0; j < obs.size(); ++j) {
        if (j > 0 && !(obs[j].time > obs[j - 1].time))
          throw ValidationError(panel_path + " row " + std::to_string(obs[j].row) +
                                ": duplicate or non-increasing time for subject " +
                                std::to_string(id));
        if (obs[j].state == -1 && j != 0)
          throw ValidationError(panel_path + " row " + std::to_string(obs[j].row) +
                                ": missing state allowed only at a series' first time");
        s.times.push_back(obs[j].time);
        s.states.push_back(obs[j].state == -1 ? -1 : obs[j].state - 1);
      }
      s.missing_first = s.states[0] == -1;
      const int q = static_cast<int>(z_names[h].size());
      if (q > 0) {
        s.z.resize(s.n_times(), q);
        const auto it = z_raw.find(id);
        for (int col = 0; col < q; ++col) {
          const std::string& name = z_names[h][col];
          for (int j = 0; j < s.n_times(); ++j) {
            bool found = false;
            double value = 0.0;
            if (it != z_raw.end()) {
              const auto& by_time = it->second[h];
              const auto nit = by_time.find(name);
              if (nit != by_time.end()) {
                // match the panel time allowing for formatting noise
                const auto tit = nit->second.lower_bound(s.times[j] - 1e-9);
                if (tit != nit->second.end() && std::abs(tit->first - s.times[j]) < 1e-9) {
                  value = tit->second;
                  found = true;
                }
              }
            }
            if (!found)
              throw ValidationError(tv_path + ": subject " + std::to_string(id) + ", process " +
                                    std::to_string(h + 1) + ": no value of '" + name +
                                    "' at time " + format_double(s.times[j]));
            s.z(j, col) = value;
          }
        }
      }
    }
    subjects.push_back(std::move(subj));
  }

  // centring and scaling of continuous covariate columns
  std::vector<Transform> x_tr(x_names.size());
  std::vector<std::vector<Transform>> z_tr(p);
  for (int h = 0; h < p; ++h) z_tr[h].resize(z_names[h].size());
  if (standardize) {
    for (std::size_t j = 0; j < x_names.size(); ++j) {
      std::set<double> distinct;
      double mean = 0.0;
      for (const auto& s : subjects) {
        distinct.insert(s.x[j]);
        mean += s.x[j];
      }
      if (distinct.size() <= 2) continue;  // binary/dummy columns stay as they are
      mean /= subjects.size();
      double var = 0.0;
      for (const auto& s : subjects) var += (s.x[j] - mean) * (s.x[j] - mean);
      var /= (subjects.size() - 1);
      if (!(var > 0.0)) continue;
      x_tr[j] = {mean, std::sqrt(var)};
      for (auto& s : subjects) s.x[j] = (s.x[j] - x_tr[j].center) / x_tr[j].scale;
    }
    for (int h = 0; h < p; ++h) {
      for (std::size_t col = 0; col < z_names[h].size(); ++col) {
        std::set<double> distinct;
        double mean = 0.0;
        long count = 0;
        for (const auto& s : subjects)
          for (int j = 0; j < s.series[h].n_times(); ++j) {
            distinct.insert(s.series[h].z(j, col));
            mean += s.series[h].z(j, col);
            ++count;
          }
        if (distinct.size() <= 2) continue;
        mean /= count;
        double var = 0.0;
        for (const auto& s : subjects)
          for (int j = 0; j < s.series[h].n_times(); ++j)
            var += (s.series[h].z(j, col) - mean) * (s.series[h].z(j, col) - mean);
        var /= (count - 1);
        if (!(var > 0.0)) continue;
        z_tr[h][col] = {mean, std::sqrt(var)};
        for (auto& s : subjects)
          for (int j = 0; j < s.series[h].n_times(); ++j)
            s.series[h].z(j, col) = (s.series[h].z(j, col) - mean) / z_tr[h][col].scale;
      }
    }
  }

  return {PanelDataset(design, std::move(subjects)), std::move(ids), std::move(x_names),
          std::move(x_tr), std::move(z_names), std::move(z_tr)};
}

// ---------------------------------------------------------------------------
// config file
// ---------------------------------------------------------------------------

CliConfig parse_config_file(const std::string& path) {
  CliConfig config;
  const auto lines = read_lines(path);
  int row = 0;
  for (const auto& raw_line : lines) {
    ++row;
    std::string line = raw_line;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    const auto notspace = [](unsigned char c) { return !std::isspace(c); };
    line.erase(line.begin(), std::find_if(line.begin(), line.end(), notspace));
    line.erase(std::find_if(line.rbegin(), line.rend(), notspace).base(), line.end());
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError(path + " line " + std::to_string(row) + ": expected key = value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    key.erase(std::find_if(key.rbegin(), key.rend(), notspace).base(), key.end());
    value.erase(value.begin(), std::find_if(value.begin(), value.end(), notspace));
    if (key.empty() || value.empty())
      throw ValidationError(path + " line " + std::to_string(row) + ": empty key or value");

    auto as_double = [&] { return parse_double(value, path, row, key.c_str()); };
    auto as_long = [&] { return parse_long(value, path, row, key.c_str()); };
    auto as_bool = [&] {
      if (value == "true" || value == "1") return true;
      if (value == "false" || value == "0") return false;
      throw ValidationError(path + " line " + std::to_string(row) + ": boolean expected");
    };

    ChainConfig& c = config.chain;
    if (key == "n_iter") c.n_iter = as_long();
    else if (key == "burnin") c.burnin = as_long();
    else if (key == "thin") c.thin = static_cast<int>(as_long());
    else if (key == "adapt_burnin") c.adapt_burnin = as_long();
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(as_long());
    else if (key == "n_mc") c.n_mc = static_cast<int>(as_long());
    else if (key == "init_components") c.init_components = static_cast<int>(as_long());
    else if (key == "prior_only") c.prior_only = as_bool();
    else if (key == "lambda") c.hyper.lambda = as_double();
    else if (key == "gamma_s") c.hyper.gamma_s = as_double();
    else if (key == "eta") c.hyper.eta = as_double();
    else if (key == "nu") c.hyper.nu = as_double();
    else if (key == "psi_scale") c.hyper.psi_scale = as_double();
    else if (key == "m_mu") c.hyper.m_mu = as_double();
    else if (key == "a_k0") c.hyper.a_k0 = as_double();
    else if (key == "b_k0") c.hyper.b_k0 = as_double();
    else if (key == "phi_proposal_sd") c.proposal.phi_sd = as_double();
    else if (key == "init_proposal_sd") c.proposal.init_sd = as_double();
    else if (key == "proposal_jitter") c.proposal.jitter = as_double();
    else if (key == "proposal_scale") c.proposal.scale = as_double();
    else if (key == "standardize") config.standardize = as_bool();
    else
      throw ValidationError(path + " line " + std::to_string(row) + ": unknown key '" + key +
                            "'");
  }
  config.chain.validate();
  return config;
}

// ---------------------------------------------------------------------------
// simulate outputs
// ---------------------------------------------------------------------------

void write_dataset(const std::string& dir, const SimResult& sim) {
  const StudyDesign& design = sim.data.design();
  const int p = design.n_processes();

  {
    std::ofstream out(dir + "/panel.csv");
    if (!out) throw ValidationError("cannot write " + dir + "/panel.csv");
    out << "subject_id,process,time,state\n";
    for (int i = 0; i < sim.data.n_subjects(); ++i)
      for (int h = 0; h < p; ++h) {
        const ProcessSeries& s = sim.data.series(i, h);
        for (int j = 0; j < s.n_times(); ++j) {
          out << i + 1 << ',' << h + 1 << ',' << format_double(s.times[j]) << ',';
          if (s.states[j] >= 0) out << s.states[j] + 1;
          out << '\n';
        }
      }
  }
  {
    std::ofstream out(dir + "/covariates.csv");
    out << "subject_id,name,value\n";
    for (int i = 0; i < sim.data.n_subjects(); ++i) {
      const Subject& subj = sim.data.subject(i);
      for (int j = 0; j < subj.x.size(); ++j)
        out << i + 1 << ",x" << j + 1 << ',' << format_double(subj.x[j]) << '\n';
    }
  }
  {
    std::ofstream out(dir + "/covariates_tv.csv");
    out << "subject_id,process,time,name,value\n";
    for (int i = 0; i < sim.data.n_subjects(); ++i)
      for (int h = 0; h < p; ++h) {
        const ProcessSeries& s = sim.data.series(i, h);
        for (int col = 0; col < s.z.cols(); ++col)
          for (int j = 0; j < s.n_times(); ++j)
            out << i + 1 << ',' << h + 1 << ',' << format_double(s.times[j]) << ",z" << col + 1
                << ',' << format_double(s.z(j, col)) << '\n';
      }
  }
  {
    nlohmann::json dj;
    for (int h = 0; h < p; ++h) {
      dj["processes"].push_back(
          {{"process", h + 1},
           {"n_states", design.n_states(h)},
           {"role", design.process(h).role == ProcessRole::response ? "response"
                                                                    : "explanatory"}});
    }
    write_json_atomic(dj, dir + "/design.json");
  }
  {
    nlohmann::json tj;
    for (int a : sim.truth.allocations) tj["allocations"].push_back(a + 1);
    for (const auto& phi : sim.truth.phi_star) {
      nlohmann::json row = nlohmann::json::array();
      for (int j = 0; j < phi.size(); ++j) row.push_back(phi[j]);
      tj["phi_star"].push_back(row);
    }
    auto matrix_json = [](const Eigen::MatrixXd& m) {
      nlohmann::json rows = nlohmann::json::array();
      for (int r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
      }
      return rows;
    };
    tj["beta"] = matrix_json(sim.truth.beta);
    tj["gamma"] = matrix_json(sim.truth.gamma);
    write_json_atomic(tj, dir + "/truth.json");
  }
}

// ---------------------------------------------------------------------------
// sample records
// ---------------------------------------------------------------------------

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) return Eigen::MatrixXd();
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  return m;
}

}  // namespace

nlohmann::json record_to_json(const SampleRecord& rec,
                              const std::vector<Transform>& x_transforms,
                              const std::vector<std::vector<Transform>>& z_transforms) {
  nlohmann::json j;
  j["iter"] = rec.iter;
  j["M"] = rec.n_components;
  j["K_N"] = rec.k_n;
  nlohmann::json c = nlohmann::json::array();
  for (int ci : rec.c) c.push_back(ci + 1);
  j["c"] = c;
  nlohmann::json phis = nlohmann::json::array();
  for (const auto& phi : rec.phi_star) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < phi.size(); ++k) row.push_back(phi[k]);
    phis.push_back(row);
  }
  j["phi_star"] = phis;
  nlohmann::json s = nlohmann::json::array();
  for (int k = 0; k < rec.s.size(); ++k) s.push_back(rec.s[k]);
  j["S"] = s;
  // coefficients reported on the original covariate scale
  nlohmann::json betas = nlohmann::json::array();
  for (const auto& b : rec.beta) {
    Eigen::MatrixXd orig = b;
    for (int r = 0; r < orig.rows(); ++r) orig.row(r) /= x_transforms[r].scale;
    betas.push_back(matrix_to_json(orig));
  }
  j["beta"] = betas;
  nlohmann::json gammas = nlohmann::json::array();
  for (std::size_t h = 0; h < rec.gamma.size(); ++h) {
    Eigen::MatrixXd orig = rec.gamma[h];
    for (int r = 0; r < orig.rows(); ++r) orig.row(r) /= z_transforms[h][r].scale;
    gammas.push_back(matrix_to_json(orig));
  }
  j["gamma"] = gammas;
  nlohmann::json mu = nlohmann::json::array();
  for (int k = 0; k < rec.mu.size(); ++k) mu.push_back(rec.mu[k]);
  j["mu"] = mu;
  j["k0"] = rec.k0;
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [h, k] : rec.g0_edges) edges.push_back({h + 1, k + 1});
  j["g0_edges"] = edges;
  j["log_lik"] = rec.log_lik;
  return j;
}

SampleRecord record_from_json(const nlohmann::json& j) {
  SampleRecord rec;
  rec.iter = j.at("iter").get<long>();
  rec.n_components = j.at("M").get<int>();
  rec.k_n = j.at("K_N").get<int>();
  for (const auto& ci : j.at("c")) rec.c.push_back(ci.get<int>() - 1);
  for (const auto& row : j.at("phi_star")) {
    Eigen::VectorXd phi(row.size());
    for (std::size_t k = 0; k < row.size(); ++k) phi[k] = row[k].get<double>();
    rec.phi_star.push_back(std::move(phi));
  }
  const auto& s = j.at("S");
  rec.s.resize(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) rec.s[k] = s[k].get<double>();
  for (const auto& b : j.at("beta")) rec.beta.push_back(matrix_from_json(b));
  for (const auto& g : j.at("gamma")) rec.gamma.push_back(matrix_from_json(g));
  const auto& mu = j.at("mu");
  rec.mu.resize(mu.size());
  for (std::size_t k = 0; k < mu.size(); ++k) rec.mu[k] = mu[k].get<double>();
  rec.k0 = j.at("k0").get<double>();
  for (const auto& e : j.at("g0_edges"))
    rec.g0_edges.emplace_back(e[0].get<int>() - 1, e[1].get<int>() - 1);
  rec.log_lik = j.at("log_lik").get<double>();
  return rec;
}

PosteriorChain read_samples_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  PosteriorChain chain;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    try {
      chain.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path + " line " + std::to_string(row) + ": " + e.what());
    }
  }
  return chain;
}

// ---------------------------------------------------------------------------
// manifest
// ---------------------------------------------------------------------------

void write_json_atomic(const nlohmann::json& j, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ValidationError("cannot write " + tmp);
    out << j.dump(2) << '\n';
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw ValidationError("cannot rename " + tmp + " to " + path);
}

nlohmann::json make_manifest(const CliConfig& config, std::uint64_t seed, int n_chains,
                             const std::string& data_dir, const LoadedData& loaded) {
  nlohmann::json m;
  m["version"] = version_string();
  m["seed"] = seed;
  m["n_chains"] = n_chains;
  for (int k = 0; k < n_chains; ++k) m["chain_seeds"].push_back(chain_seed(seed, k));
  const ChainConfig& c = config.chain;
  m["config"] = {{"n_iter", c.n_iter},
                 {"burnin", c.burnin},
                 {"thin", c.thin},
                 {"adapt_burnin", c.adapt_burnin},
                 {"n_mc", c.n_mc},
                 {"init_components", c.init_components},
                 {"prior_only", c.prior_only},
                 {"lambda", c.hyper.lambda},
                 {"gamma_s", c.hyper.gamma_s},
                 {"eta", c.hyper.eta},
                 {"nu", c.hyper.nu},
                 {"psi_scale", c.hyper.psi_scale},
                 {"m_mu", c.hyper.m_mu},
                 {"a_k0", c.hyper.a_k0},
                 {"b_k0", c.hyper.b_k0},
                 {"phi_proposal_sd", c.proposal.phi_sd},
                 {"init_proposal_sd", c.proposal.init_sd},
                 {"proposal_jitter", c.proposal.jitter},
                 {"proposal_scale", c.proposal.scale},
                 {"standardize", config.standardize}};
  for (const char* name : {"panel.csv", "covariates.csv", "covariates_tv.csv", "design.json"}) {
    const std::string path = data_dir + "/" + std::string(name);
    if (std::ifstream probe(path); probe) m["input_digests"][name] = sha256_file(path);
  }
  const StudyDesign& design = loaded.data.design();
  m["n_subjects"] = loaded.data.n_subjects();
  m["n_processes"] = design.n_processes();
  m["d_p"] = design.total_rates();
  nlohmann::json states = nlohmann::json::array();
  for (int h = 0; h < design.n_processes(); ++h) states.push_back(design.n_states(h));
  m["n_states"] = states;
  nlohmann::json xt;
  for (std::size_t j = 0; j < loaded.x_names.size(); ++j)
    xt[loaded.x_names[j]] = {loaded.x_transforms[j].center, loaded.x_transforms[j].scale};
  m["x_transforms"] = xt.is_null() ? nlohmann::json::object() : xt;
  m["x_names"] = loaded.x_names;
  nlohmann::json zt = nlohmann::json::array();
  nlohmann::json zn = nlohmann::json::array();
  for (int h = 0; h < design.n_processes(); ++h) {
    nlohmann::json per;
    for (std::size_t col = 0; col < loaded.z_names[h].size(); ++col)
      per[loaded.z_names[h][col]] = {loaded.z_transforms[h][col].center,
                                     loaded.z_transforms[h][col].scale};
    zt.push_back(per.is_null() ? nlohmann::json::object() : per);
    zn.push_back(loaded.z_names[h]);
  }
  m["z_transforms"] = zt;
  m["z_names"] = zn;
  return m;
}

}  // namespace sums
