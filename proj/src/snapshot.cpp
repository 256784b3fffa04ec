#include "onlineboot/snapshot.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace onlineboot {

namespace {

constexpr const char* kMagic = "onlineboot-snapshot";

std::string hex_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

double parse_double(const std::string& token) {
  char* end = nullptr;
  const double x = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw std::runtime_error("snapshot: bad number '" + token + "'");
  return x;
}

void write_doubles(std::ostream& out, const char* key, const std::vector<double>& values) {
  out << key << ' ' << values.size();
  for (double x : values) out << ' ' << hex_double(x);
  out << '\n';
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::istringstream line(const std::string& key) {
    std::string text;
    if (!std::getline(in_, text)) throw std::runtime_error("snapshot: truncated before '" + key + "'");
    std::istringstream ls(text);
    std::string got;
    ls >> got;
    if (got != key) throw std::runtime_error("snapshot: expected '" + key + "', found '" + got + "'");
    return ls;
  }

  std::uint64_t integer(const std::string& key) {
    auto ls = line(key);
    std::uint64_t v = 0;
    if (!(ls >> v)) throw std::runtime_error("snapshot: bad integer for '" + key + "'");
    return v;
  }

  std::string word(const std::string& key) {
    auto ls = line(key);
    std::string v;
    if (!(ls >> v)) throw std::runtime_error("snapshot: missing value for '" + key + "'");
    return v;
  }

  std::vector<double> doubles(const std::string& key) {
    auto ls = line(key);
    std::size_t count = 0;
    if (!(ls >> count)) throw std::runtime_error("snapshot: bad count for '" + key + "'");
    std::vector<double> out;
    out.reserve(count);
    std::string token;
    for (std::size_t i = 0; i < count; ++i) {
      if (!(ls >> token)) throw std::runtime_error("snapshot: short list for '" + key + "'");
      out.push_back(parse_double(token));
    }
    return out;
  }

 private:
  std::istream& in_;
};

}  // namespace

void save_snapshot(const Ensemble& ensemble, std::ostream& out) {
  const EnsembleState& s = ensemble.state();
  const EnsembleConfig& c = s.config;
  out << kMagic << ' ' << kSnapshotVersion << '\n';
  out << "method " << method_name(c.method) << '\n';
  out << "chains " << c.chains << '\n';
  out << "dim " << c.dim << '\n';
  out << "beta " << hex_double(c.beta) << '\n';
  out << "seed " << c.seed << '\n';
  out << "max_history " << c.max_history << '\n';
  out << "t " << s.t << '\n';
  write_doubles(out, "xbar", s.xbar);
  write_doubles(out, "v", s.v);
  write_doubles(out, "vbar", s.vbar);
  write_doubles(out, "xbar_star", s.xbar_star);
  out << "rngs " << s.rngs.size() << '\n';
  for (const auto& rng : s.rngs) {
    const auto& st = rng.state();
    out << "rng";
    for (auto w : st.words) out << ' ' << w;
    out << ' ' << hex_double(st.spare) << ' ' << (st.has_spare ? 1 : 0) << '\n';
  }
  out << "block_m " << s.block_m << '\n';
  out << "ring_head " << s.ring_head << '\n';
  out << "regenerations " << s.regenerations << '\n';
  out << "last_regenerated " << (s.last_regenerated ? 1 : 0) << '\n';
  write_doubles(out, "history", s.history);
  write_doubles(out, "rings", s.rings);
  out << "end\n";
}

Ensemble load_snapshot(std::istream& in) {
  Reader r(in);
  {
    auto ls = r.line(kMagic);
    int version = 0;
    if (!(ls >> version) || version != kSnapshotVersion) {
      throw std::runtime_error("snapshot: unsupported format version");
    }
  }
  EnsembleState s;
  try {
    s.config.method = parse_method(r.word("method"));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("snapshot: ") + e.what());
  }
  s.config.chains = r.integer("chains");
  s.config.dim = r.integer("dim");
  s.config.beta = parse_double(r.word("beta"));
  s.config.seed = r.integer("seed");
  s.config.max_history = r.integer("max_history");
  s.t = r.integer("t");
  s.xbar = r.doubles("xbar");
  s.v = r.doubles("v");
  s.vbar = r.doubles("vbar");
  s.xbar_star = r.doubles("xbar_star");
  const std::uint64_t n_rngs = r.integer("rngs");
  s.rngs.reserve(n_rngs);
  for (std::uint64_t i = 0; i < n_rngs; ++i) {
    auto ls = r.line("rng");
    RandomStreamState st;
    std::string spare;
    int has_spare = 0;
    for (auto& w : st.words) {
      if (!(ls >> w)) throw std::runtime_error("snapshot: bad rng state");
    }
    if (!(ls >> spare >> has_spare)) throw std::runtime_error("snapshot: bad rng state");
    st.spare = parse_double(spare);
    st.has_spare = has_spare != 0;
    s.rngs.emplace_back(st);
  }
  s.block_m = r.integer("block_m");
  s.ring_head = r.integer("ring_head");
  s.regenerations = r.integer("regenerations");
  s.last_regenerated = r.integer("last_regenerated") != 0;
  s.history = r.doubles("history");
  s.rings = r.doubles("rings");
  r.line("end");
  try {
    return Ensemble(std::move(s));
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("snapshot: ") + e.what());
  }
}

}  // namespace onlineboot
