#include "pscape/trajectory_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pscape/error.hpp"

namespace pscape {

int amino_acid_index(char code) noexcept {
  const auto pos = kAminoAcids.find(code);
  return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

void Trajectory::validate() const {
  if (frames.size() < 2) throw ArgumentError("trajectory needs at least 2 frames");
  const std::size_t n = frames.front().size();
  if (n < 4) throw ArgumentError("trajectory needs at least 4 residues");
  const std::string& seq = frames.front().sequence;
  for (char c : seq) {
    if (amino_acid_index(c) < 0) throw ArgumentError(std::string("unknown amino acid '") + c + "'");
  }
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& fr = frames[f];
    if (fr.coords.cols() != 3 || fr.size() != n || fr.sequence.size() != n)
      throw ArgumentError("residue count mismatch in frame " + std::to_string(f));
    if (fr.sequence != seq) throw ArgumentError("sequence differs in frame " + std::to_string(f));
    if (!fr.coords.allFinite()) throw ArgumentError("non-finite coordinate in frame " + std::to_string(f));
    if (f > 0 && fr.t <= frames[f - 1].t)
      throw ArgumentError("frame times must be strictly increasing (frame " + std::to_string(f) + ")");
  }
}

namespace {

struct LineReader {
  std::istream& is;
  std::size_t lineno = 0;
  std::string line;

  bool next() {
    if (!std::getline(is, line)) return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
};

long long header_field(std::string_view token, std::string_view key, std::size_t lineno) {
  long long v = 0;
  if (!token.starts_with(key) || !parse_int(token.substr(key.size()), v))
    throw ParseError(lineno, "malformed header");
  return v;
}

} // namespace

Trajectory parse_trajectory(std::istream& is, std::string name) {
  LineReader in{is, 0, {}};
  bool have = false;
  while ((have = in.next())) {
    if (!in.line.starts_with("#")) break;
  }
  if (!have) throw ParseError(in.lineno + 1, "malformed header: empty file");

  const auto head = split_ws(in.line);
  if (head.size() != 4 || head[0] != "PTRAJ" || head[1] != "v1") throw ParseError(in.lineno, "malformed header");
  const long long n = header_field(head[2], "n=", in.lineno);
  const long long n_frames = header_field(head[3], "frames=", in.lineno);
  if (n < 4) throw ParseError(in.lineno, "malformed header: n must be >= 4");
  if (n_frames < 2) throw ParseError(in.lineno, "malformed header: frames must be >= 2");

  if (!in.next()) throw ParseError(in.lineno + 1, "missing sequence line");
  const std::string sequence(trim(in.line));
  if (static_cast<long long>(sequence.size()) != n)
    throw ParseError(in.lineno, "residue count mismatch: sequence length " + std::to_string(sequence.size()) +
                                    " but header says " + std::to_string(n));
  for (char c : sequence) {
    if (amino_acid_index(c) < 0) throw ParseError(in.lineno, std::string("unknown amino acid '") + c + "'");
  }

  Trajectory traj;
  traj.name = std::move(name);
  bool pending = in.next();
  while (pending) {
    if (trim(in.line).empty()) {
      pending = in.next();
      continue;
    }
    const auto tok = split_ws(in.line);
    if (tok.size() != 2 || tok[0] != "FRAME") {
      if (traj.frames.empty()) throw ParseError(in.lineno, "expected FRAME line");
      throw ParseError(in.lineno, "residue count mismatch: more than " + std::to_string(n) + " coordinate lines");
    }
    long long t = 0;
    if (!parse_int(tok[1], t)) throw ParseError(in.lineno, "malformed FRAME index");
    if (!traj.frames.empty() && t <= traj.frames.back().t)
      throw ParseError(in.lineno, "frame index not strictly increasing");

    TrajectoryFrame frame;
    frame.t = t;
    frame.sequence = sequence;
    frame.coords.resize(n, 3);
    for (long long i = 0; i < n; ++i) {
      if (!in.next()) throw ParseError(in.lineno + 1, "residue count mismatch: unexpected end of file");
      const auto xyz = split_ws(in.line);
      if (xyz.size() == 2 && xyz[0] == "FRAME")
        throw ParseError(in.lineno, "residue count mismatch: expected " + std::to_string(n) + " coordinate lines");
      if (xyz.size() != 3) throw ParseError(in.lineno, "expected three coordinates");
      for (int d = 0; d < 3; ++d) {
        double v = 0.0;
        if (!parse_double(xyz[d], v)) throw ParseError(in.lineno, "malformed coordinate");
        if (!std::isfinite(v)) throw ParseError(in.lineno, "non-finite coordinate");
        frame.coords(i, d) = v;
      }
    }
    traj.frames.push_back(std::move(frame));
    pending = in.next();
  }

  if (static_cast<long long>(traj.frames.size()) != n_frames)
    throw ParseError(in.lineno, "frame count mismatch: header says " + std::to_string(n_frames) + ", found " +
                                    std::to_string(traj.frames.size()));
  return traj;
}

Trajectory parse_trajectory(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ArgumentError("cannot open trajectory file " + path.string());
  return parse_trajectory(is, path.stem().string());
}

void write_trajectory(std::ostream& os, const Trajectory& traj, const std::optional<ArtifactHeader>& header) {
  traj.validate();
  if (header) write_header(os, *header);
  os << "PTRAJ v1 n=" << traj.residues() << " frames=" << traj.frames.size() << '\n';
  os << traj.sequence() << '\n';
  for (const auto& fr : traj.frames) {
    os << "FRAME " << fr.t << '\n';
    for (Eigen::Index i = 0; i < fr.coords.rows(); ++i) {
      os << format_double(fr.coords(i, 0)) << ' ' << format_double(fr.coords(i, 1)) << ' '
         << format_double(fr.coords(i, 2)) << '\n';
    }
  }
}

void write_trajectory(const std::filesystem::path& path, const Trajectory& traj,
                      const std::optional<ArtifactHeader>& header) {
  std::ofstream os(path);
  if (!os) throw ArgumentError("cannot write " + path.string());
  write_trajectory(os, traj, header);
}

} // namespace pscape
