#include "pscape/checkpoint.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "pscape/error.hpp"

namespace pscape {

namespace {

std::string bool_text(bool b) { return b ? "true" : "false"; }

struct Reader {
  std::istream& is;
  std::size_t lineno = 0;
  std::string line;

  bool next() {
    while (std::getline(is, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!trim(line).empty()) return true;
    }
    return false;
  }
  void require() {
    if (!next()) throw ParseError(lineno + 1, "checkpoint truncated");
  }
};

double to_double(std::string_view tok, std::size_t line) {
  double v = 0.0;
  if (!parse_double(tok, v)) throw ParseError(line, "bad number '" + std::string(tok) + "'");
  return v;
}

long long to_int(std::string_view tok, std::size_t line) {
  long long v = 0;
  if (!parse_int(tok, v)) throw ParseError(line, "bad integer '" + std::string(tok) + "'");
  return v;
}

} // namespace

std::vector<std::pair<std::string, std::string>> config_pairs(const ModelConfig& c) {
  return {
      {"n", std::to_string(c.n)},
      {"k", std::to_string(c.k)},
      {"J", std::to_string(c.J)},
      {"t_max", std::to_string(c.t_max)},
      {"latent_dim", std::to_string(c.latent_dim)},
      {"heads", std::to_string(c.heads)},
      {"head_dim", std::to_string(c.head_dim)},
      {"hidden", std::to_string(c.hidden)},
      {"attn_hidden", std::to_string(c.attn_hidden)},
      {"residue_out", std::to_string(c.residue_out)},
      {"aa_out", std::to_string(c.aa_out)},
      {"embed_hidden", std::to_string(c.embed_hidden)},
      {"node_embedding", bool_text(c.node_embedding)},
      {"coord_head", bool_text(c.coord_head)},
      {"alpha", format_double(c.alpha)},
      {"beta", format_double(c.beta)},
      {"gamma", format_double(c.gamma)},
      {"plus_beta_structure", bool_text(c.plus_beta_structure)},
  };
}

void apply_config_value(ModelConfig& c, const std::string& key, const std::string& value) {
  auto as_int = [&](int& field) {
    long long v = 0;
    if (!parse_int(value, v)) throw ArgumentError("config " + key + ": expected an integer, got '" + value + "'");
    field = static_cast<int>(v);
  };
  auto as_double = [&](double& field) {
    if (!parse_double(value, field)) throw ArgumentError("config " + key + ": expected a number, got '" + value + "'");
  };
  auto as_bool = [&](bool& field) {
    if (value == "true" || value == "1") field = true;
    else if (value == "false" || value == "0") field = false;
    else throw ArgumentError("config " + key + ": expected true/false, got '" + value + "'");
  };
  if (key == "n") as_int(c.n);
  else if (key == "k") as_int(c.k);
  else if (key == "J") as_int(c.J);
  else if (key == "t_max") as_int(c.t_max);
  else if (key == "latent_dim") as_int(c.latent_dim);
  else if (key == "heads") as_int(c.heads);
  else if (key == "head_dim") as_int(c.head_dim);
  else if (key == "hidden") as_int(c.hidden);
  else if (key == "attn_hidden") as_int(c.attn_hidden);
  else if (key == "residue_out") as_int(c.residue_out);
  else if (key == "aa_out") as_int(c.aa_out);
  else if (key == "embed_hidden") as_int(c.embed_hidden);
  else if (key == "node_embedding") as_bool(c.node_embedding);
  else if (key == "coord_head") as_bool(c.coord_head);
  else if (key == "alpha") as_double(c.alpha);
  else if (key == "beta") as_double(c.beta);
  else if (key == "gamma") as_double(c.gamma);
  else if (key == "plus_beta_structure") as_bool(c.plus_beta_structure);
  else throw ArgumentError("unknown config key '" + key + "'");
}

void write_checkpoint(std::ostream& os, const ModelParams& params, const std::optional<ArtifactHeader>& header) {
  if (header) write_header(os, *header);
  os << "PSCAPE-CKPT v1\n";
  for (const auto& [k, v] : config_pairs(params.config)) os << "config " << k << ' ' << v << '\n';
  os << "norm t_lo " << format_double(params.norm.t_lo) << '\n';
  os << "norm t_hi " << format_double(params.norm.t_hi) << '\n';
  os << "norm pd_scale " << format_double(params.norm.pd_scale) << '\n';
  os << "norm pd_mean " << params.norm.pd_mean.size() << '\n';
  for (Eigen::Index i = 0; i < params.norm.pd_mean.size(); ++i)
    os << (i ? " " : "") << format_double(params.norm.pd_mean(i));
  os << '\n';
  for (const auto& [name, m] : params.tensors) {
    os << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? " " : "") << format_double(m(r, c));
      os << '\n';
    }
  }
  os << "end\n";
}

void write_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                      const std::optional<ArtifactHeader>& header) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  write_checkpoint(os, params, header);
}

ModelParams read_checkpoint(std::istream& is) {
  Reader in{is, 0, {}};
  do {
    if (!in.next()) throw ParseError(in.lineno + 1, "empty checkpoint");
  } while (in.line.starts_with("#"));
  if (trim(in.line) != "PSCAPE-CKPT v1") throw ParseError(in.lineno, "not a PSCAPE-CKPT v1 checkpoint");

  ModelParams params;
  bool saw_end = false;
  while (!saw_end) {
    in.require();
    const auto tok = split_ws(in.line);
    if (tok[0] == "end") {
      saw_end = true;
    } else if (tok[0] == "config") {
      if (tok.size() != 3) throw ParseError(in.lineno, "malformed config line");
      try {
        apply_config_value(params.config, std::string(tok[1]), std::string(tok[2]));
      } catch (const ArgumentError& e) {
        throw ParseError(in.lineno, e.what());
      }
    } else if (tok[0] == "norm") {
      if (tok.size() != 3) throw ParseError(in.lineno, "malformed norm line");
      if (tok[1] == "t_lo") params.norm.t_lo = to_double(tok[2], in.lineno);
      else if (tok[1] == "t_hi") params.norm.t_hi = to_double(tok[2], in.lineno);
      else if (tok[1] == "pd_scale") params.norm.pd_scale = to_double(tok[2], in.lineno);
      else if (tok[1] == "pd_mean") {
        const long long count = to_int(tok[2], in.lineno);
        if (count < 0) throw ParseError(in.lineno, "negative pd_mean length");
        in.require();
        const auto vals = split_ws(in.line);
        if (static_cast<long long>(vals.size()) != count) throw ParseError(in.lineno, "pd_mean length mismatch");
        params.norm.pd_mean.resize(count);
        for (long long i = 0; i < count; ++i) params.norm.pd_mean(i) = to_double(vals[i], in.lineno);
      } else {
        throw ParseError(in.lineno, "unknown norm field");
      }
    } else if (tok[0] == "tensor") {
      if (tok.size() != 4) throw ParseError(in.lineno, "malformed tensor line");
      const std::string name(tok[1]);
      const long long rows = to_int(tok[2], in.lineno);
      const long long cols = to_int(tok[3], in.lineno);
      if (rows < 0 || cols < 0) throw ParseError(in.lineno, "negative tensor shape");
      Matrix m(rows, cols);
      for (long long r = 0; r < rows; ++r) {
        in.require();
        const auto vals = split_ws(in.line);
        if (static_cast<long long>(vals.size()) != cols) throw ParseError(in.lineno, "tensor row has wrong length");
        for (long long c = 0; c < cols; ++c) m(r, c) = to_double(vals[c], in.lineno);
      }
      params.tensors.emplace_back(name, std::move(m));
    } else {
      throw ParseError(in.lineno, "unexpected line in checkpoint");
    }
  }
  try {
    validate_params(params);
  } catch (const Error& e) {
    throw ParseError(in.lineno, e.what());
  }
  return params;
}

ModelParams read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ArgumentError("cannot open " + path.string());
  return read_checkpoint(is);
}

} // namespace pscape
