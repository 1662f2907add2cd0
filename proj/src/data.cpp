#include "stsc/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "stsc/io.hpp"
#include "stsc/operators.hpp"
#include "stsc/rng.hpp"

namespace stsc {

namespace {

enum Stream : std::uint64_t { kNodeDraws = 1, kDrive, kNoise, kPoint, kBlock, kBlockLen };

double uniform_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return StreamRng(derive_seed(seed, stream, index)).uniform();
}

double normal_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  StreamRng rng(derive_seed(seed, stream, index));
  const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

void SynthConfig::validate() const {
  auto check = [](bool ok, const std::string& m) { require(ok, ErrorCode::invalid_input, m); };
  check(T_total >= 100, "synthetic series needs T_total >= 100");
  check(F >= 1, "need at least one feature");
  check(period > 0.0, "period must be positive");
  check(coupling >= 0.0 && coupling <= 1.0, "coupling must lie in [0, 1]");
  check(rho >= 0.0 && rho < 1.0, "rho must lie in [0, 1)");
  check(drive >= 0.0 && noise >= 0.0 && amplitude >= 0.0, "amplitudes must be non-negative");
}

nlohmann::json to_json(const SynthConfig& c) {
  return {{"T_total", c.T_total}, {"F", c.F},         {"period", c.period},
          {"amplitude", c.amplitude}, {"coupling", c.coupling}, {"rho", c.rho},
          {"drive", c.drive},     {"noise", c.noise}, {"random_phase", c.random_phase},
          {"seed", c.seed}};
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  try {
    c.T_total = j.value("T_total", c.T_total);
    c.F = j.value("F", c.F);
    c.period = j.value("period", c.period);
    c.amplitude = j.value("amplitude", c.amplitude);
    c.coupling = j.value("coupling", c.coupling);
    c.rho = j.value("rho", c.rho);
    c.drive = j.value("drive", c.drive);
    c.noise = j.value("noise", c.noise);
    c.random_phase = j.value("random_phase", c.random_phase);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_input, std::string("bad generator config: ") + e.what());
  }
  c.validate();
  return c;
}

const char* to_string(Split s) noexcept {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Scaler Scaler::fit(const STTensor& signal, TimeRange range) {
  require(signal.rank() == 3 && range.end <= signal.dim(1) && range.size() > 0,
          ErrorCode::invalid_input, "scaler needs a non-empty range of an (N, T, F) signal");
  const std::size_t N = signal.dim(0), T = signal.dim(1), F = signal.dim(2);
  Scaler s;
  s.lo.assign(F, std::numeric_limits<float>::infinity());
  s.hi.assign(F, -std::numeric_limits<float>::infinity());
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t t = range.begin; t < range.end; ++t)
      for (std::size_t f = 0; f < F; ++f) {
        const float v = signal[(n * T + t) * F + f];
        s.lo[f] = std::min(s.lo[f], v);
        s.hi[f] = std::max(s.hi[f], v);
      }
  return s;
}

float Scaler::scale(float v, std::size_t f) const {
  const float span = hi[f] - lo[f];
  return span > 0.0f ? (v - lo[f]) / span : v - lo[f];
}

float Scaler::unscale(float v, std::size_t f) const {
  const float span = hi[f] - lo[f];
  return span > 0.0f ? v * span + lo[f] : v + lo[f];
}

STTensor Scaler::scale(const STTensor& x) const {
  require(!x.empty() && x.shape().back() == lo.size(), ErrorCode::shape_error,
          "scaler feature count mismatch");
  STTensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale(out[i], i % lo.size());
  return out;
}

STTensor Scaler::unscale(const STTensor& x) const {
  require(!x.empty() && x.shape().back() == lo.size(), ErrorCode::shape_error,
          "scaler feature count mismatch");
  STTensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = unscale(out[i], i % lo.size());
  return out;
}

TimeRange Dataset::range(Split s) const {
  const std::size_t T = steps();
  const double total = fractions.train + fractions.val + fractions.test;
  const auto train_end = std::size_t(std::llround(T * fractions.train / total));
  const auto val_end = std::size_t(std::llround(T * (fractions.train + fractions.val) / total));
  switch (s) {
    case Split::train: return {0, train_end};
    case Split::val: return {train_end, val_end};
    case Split::test: return {val_end, T};
  }
  return {};
}

Dataset synth(const SimplicialComplex& complex, const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t N = complex.count(0), T = cfg.T_total, F = cfg.F;
  require(N >= 1, ErrorCode::invalid_input, "complex has no vertices");

  // Propagator P = rho (I - coupling L0 / (2 d_max)).
  const auto L = hodge_laplacian(complex, 0);
  std::int64_t dmax = 1;
  for (std::size_t n = 0; n < N; ++n) dmax = std::max(dmax, L.at(n, n));
  std::vector<double> P(N * N, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    P[n * N + n] = cfg.rho;
    auto cols = L.row_cols(n);
    auto vals = L.row_values(n);
    for (std::size_t k = 0; k < cols.size(); ++k)
      P[n * N + cols[k]] -= cfg.rho * cfg.coupling * double(vals[k]) / (2.0 * double(dmax));
  }

  Dataset ds;
  ds.complex = complex;
  ds.signal = STTensor({N, T, F});
  ds.seed = cfg.seed;
  ds.generator = to_json(cfg);
  ds.generator["kind"] = "sinusoid+diffusion";
  for (std::size_t f = 0; f < F; ++f) {
    const double period = cfg.period * (1.0 + 0.5 * double(f));
    std::vector<double> amp(N), phase(N), offset(N);
    for (std::size_t n = 0; n < N; ++n) {
      const std::uint64_t k = (f * N + n) * 3;
      amp[n] = cfg.amplitude * (0.5 + uniform_at(cfg.seed, kNodeDraws, k));
      phase[n] = cfg.random_phase ? 2.0 * std::numbers::pi * uniform_at(cfg.seed, kNodeDraws, k + 1) : 0.0;
      offset[n] = cfg.random_phase ? uniform_at(cfg.seed, kNodeDraws, k + 2) - 0.5 : 0.0;
    }
    std::vector<double> d(N, 0.0), next(N);
    for (std::size_t t = 0; t < T; ++t) {
      if (t > 0) {
        for (std::size_t n = 0; n < N; ++n) {
          double acc = 0.0;
          for (std::size_t m = 0; m < N; ++m) acc += P[n * N + m] * d[m];
          const std::uint64_t k = (f * T + t) * N + n;
          next[n] = acc + (cfg.drive > 0.0 ? cfg.drive * normal_at(cfg.seed, kDrive, k) : 0.0);
        }
        d.swap(next);
      }
      for (std::size_t n = 0; n < N; ++n) {
        const std::uint64_t k = (f * T + t) * N + n;
        const double s = offset[n] + amp[n] * std::sin(2.0 * std::numbers::pi * double(t) / period + phase[n]);
        const double e = cfg.noise > 0.0 ? cfg.noise * normal_at(cfg.seed, kNoise, k) : 0.0;
        ds.signal[(n * T + t) * F + f] = float(s + d[n] + e);
      }
    }
  }
  ds.edge_feats = STTensor({complex.count(1), 1});
  ds.tri_feats = STTensor({complex.count(2), 1});
  return ds;
}

DeskComplex desk_complex() {
  // Three copies of the Figure-1 motif {a,b,c} + {b,d}, joined in a ring by
  // edges d -> next a.
  constexpr std::size_t kMotifs = 3;
  std::vector<Edge> edges;
  std::vector<Point2> pos;
  const Point2 local[4] = {{0.0, 0.0}, {1.0, 0.0}, {0.5, 0.9}, {2.0, -0.3}};
  for (std::size_t m = 0; m < kMotifs; ++m) {
    const VertexId a = VertexId(4 * m);
    edges.push_back({a, a + 1});
    edges.push_back({a, a + 2});
    edges.push_back({a + 1, a + 2});
    edges.push_back({a + 1, a + 3});
    edges.push_back({a + 3, VertexId(4 * ((m + 1) % kMotifs))});
    const double ang = 2.0 * std::numbers::pi * double(m) / double(kMotifs);
    const double c = std::cos(ang), s = std::sin(ang);
    for (const auto& p : local) {
      const double x = p.x + 3.0, y = p.y;
      pos.push_back({c * x - s * y, s * x + c * y});
    }
  }
  return {SimplicialComplex::from_edges(edges, true), std::move(pos)};
}

std::pair<STTensor, STTensor> geometric_features(const SimplicialComplex& complex,
                                                 std::span<const Point2> positions) {
  require(positions.size() == complex.count(0), ErrorCode::invalid_input,
          "need one position per vertex");
  auto at = [&](VertexId v) { return positions[*complex.find_vertex(v)]; };
  STTensor len({complex.count(1), 1}), area({complex.count(2), 1});
  for (std::size_t i = 0; i < complex.count(1); ++i) {
    const auto& e = complex.edges()[i];
    const auto p = at(e[0]), q = at(e[1]);
    len[i] = float(std::hypot(p.x - q.x, p.y - q.y));
  }
  for (std::size_t i = 0; i < complex.count(2); ++i) {
    const auto& t = complex.triangles()[i];
    const auto a = at(t[0]), b = at(t[1]), c = at(t[2]);
    area[i] = float(0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)));
  }
  for (STTensor* x : {&len, &area}) {
    float mx = 0.0f;
    for (float v : x->data()) mx = std::max(mx, v);
    if (mx > 0.0f)
      for (float& v : x->data()) v /= mx;
  }
  return {std::move(len), std::move(area)};
}

// ---------------------------------------------------------------------------
// Dataset directory

namespace {

std::string fmt(float v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void write_table(const std::filesystem::path& path, const std::string& header,
                 const std::vector<std::vector<VertexId>>& keys, const STTensor& feats) {
  std::ostringstream os;
  os << header;
  const std::size_t width = feats.empty() ? 0 : feats.dim(1);
  for (std::size_t f = 0; f < width; ++f) os << ",f" << f;
  os << '\n';
  for (std::size_t i = 0; i < keys.size(); ++i) {
    for (std::size_t k = 0; k < keys[i].size(); ++k) os << (k ? "," : "") << keys[i][k];
    for (std::size_t f = 0; f < width; ++f) os << ',' << fmt(feats[i * width + f]);
    os << '\n';
  }
  write_text(path, os.str());
}

struct Table {
  std::vector<std::vector<VertexId>> keys;
  std::vector<std::vector<float>> values;
  std::size_t width = 0;
};

Table read_table(const std::filesystem::path& path, std::size_t num_keys, const std::string& prefix) {
  std::istringstream is(read_text(path));
  std::string line;
  Table t;
  std::size_t lineno = 0;
  const auto where = [&] { return path.filename().string() + " line " + std::to_string(lineno) + ": "; };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (t.keys.empty() && t.width == 0 && lineno == 1) {
      require(cells.size() >= num_keys && line.rfind(prefix, 0) == 0, ErrorCode::invalid_input,
              where() + "expected header starting with " + prefix);
      t.width = cells.size() - num_keys;
      continue;
    }
    require(cells.size() == num_keys + t.width, ErrorCode::invalid_input,
            where() + "expected " + std::to_string(num_keys + t.width) + " fields");
    std::vector<VertexId> k(num_keys);
    std::vector<float> v(t.width);
    for (std::size_t i = 0; i < num_keys; ++i) {
      auto [p, ec] = std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), k[i]);
      require(ec == std::errc() && p == cells[i].data() + cells[i].size(), ErrorCode::invalid_input,
              where() + "bad integer '" + cells[i] + "'");
    }
    for (std::size_t i = 0; i < t.width; ++i) {
      const auto& c = cells[num_keys + i];
      auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v[i]);
      require(ec == std::errc() && p == c.data() + c.size(), ErrorCode::invalid_input,
              where() + "bad number '" + c + "'");
    }
    t.keys.push_back(std::move(k));
    t.values.push_back(std::move(v));
  }
  require(lineno >= 1, ErrorCode::invalid_input, path.string() + " is empty");
  return t;
}

STTensor static_feats(const Table& t, std::size_t rows,
                      const std::function<std::optional<std::size_t>(const std::vector<VertexId>&)>& find,
                      const std::string& what) {
  STTensor out({rows, std::max<std::size_t>(t.width, 1)});
  const std::size_t w = std::max<std::size_t>(t.width, 1);
  require(t.keys.size() == rows, ErrorCode::invalid_input,
          what + " table has " + std::to_string(t.keys.size()) + " rows, complex has " +
              std::to_string(rows));
  for (std::size_t i = 0; i < t.keys.size(); ++i) {
    auto idx = find(t.keys[i]);
    require(idx.has_value(), ErrorCode::invalid_input,
            what + " " + format_simplex(t.keys[i]) + " is not in the complex");
    for (std::size_t f = 0; f < t.width; ++f) out[*idx * w + f] = t.values[i][f];
  }
  return out;
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  save_complex(dir / "complex.json", ds.complex);
  const std::size_t N = ds.num_nodes(), T = ds.steps(), F = ds.features();
  std::ostringstream os;
  os << "time,node";
  for (std::size_t f = 0; f < F; ++f) os << ",f" << f;
  os << '\n';
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t n = 0; n < N; ++n) {
      os << t << ',' << ds.complex.vertices()[n];
      for (std::size_t f = 0; f < F; ++f) os << ',' << fmt(ds.signal[(n * T + t) * F + f]);
      os << '\n';
    }
  write_text(dir / "nodes.csv", os.str());
  std::vector<std::vector<VertexId>> ek, tk;
  for (const auto& e : ds.complex.edges()) ek.push_back({e[0], e[1]});
  for (const auto& t : ds.complex.triangles()) tk.push_back({t[0], t[1], t[2]});
  write_table(dir / "edges.csv", "u,v", ek, ds.edge_feats);
  write_table(dir / "triangles.csv", "u,v,w", tk, ds.tri_feats);
  nlohmann::json manifest = {
      {"T_total", T},
      {"F", F},
      {"nodes", N},
      {"splits", {ds.fractions.train, ds.fractions.val, ds.fractions.test}},
      {"seed", ds.seed},
      {"generator", ds.generator}};
  write_json(dir / "manifest.json", manifest);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  require(std::filesystem::exists(dir / "manifest.json"), ErrorCode::invalid_input,
          "no manifest.json in " + dir.string());
  const auto manifest = read_json(dir / "manifest.json");
  Dataset ds;
  std::size_t T = 0, F = 0;
  try {
    T = manifest.at("T_total").get<std::size_t>();
    F = manifest.at("F").get<std::size_t>();
    const auto splits = manifest.value("splits", std::vector<double>{0.7, 0.1, 0.2});
    require(splits.size() == 3, ErrorCode::invalid_input, "manifest splits must have 3 entries");
    ds.fractions = {splits[0], splits[1], splits[2]};
    ds.seed = manifest.value("seed", std::uint64_t{0});
    ds.generator = manifest.value("generator", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_input, std::string("bad manifest: ") + e.what());
  }
  ds.complex = load_complex(dir / "complex.json");
  const std::size_t N = ds.complex.count(0);
  const Table nodes = read_table(dir / "nodes.csv", 2, "time,node");
  require(nodes.width == F, ErrorCode::invalid_input, "nodes.csv width does not match manifest F");
  require(nodes.keys.size() == N * T, ErrorCode::invalid_input,
          "nodes.csv must have one row per (time, node)");
  ds.signal = STTensor({N, T, F});
  std::vector<char> seen(N * T, 0);
  for (std::size_t i = 0; i < nodes.keys.size(); ++i) {
    const auto t = nodes.keys[i][0];
    const auto n = ds.complex.find_vertex(nodes.keys[i][1]);
    require(t >= 0 && std::size_t(t) < T && n.has_value(), ErrorCode::invalid_input,
            "nodes.csv row " + std::to_string(i + 2) + " has an unknown time or node");
    require(!seen[*n * T + t], ErrorCode::invalid_input,
            "nodes.csv row " + std::to_string(i + 2) + " repeats a (time, node) pair");
    seen[*n * T + t] = 1;
    for (std::size_t f = 0; f < F; ++f) ds.signal[(*n * T + t) * F + f] = nodes.values[i][f];
  }
  const auto& c = ds.complex;
  ds.edge_feats = static_feats(
      read_table(dir / "edges.csv", 2, "u,v"), c.count(1),
      [&](const std::vector<VertexId>& k) { return c.find_edge(k[0], k[1]); }, "edge");
  ds.tri_feats = static_feats(
      read_table(dir / "triangles.csv", 3, "u,v,w"), c.count(2),
      [&](const std::vector<VertexId>& k) { return c.find_triangle(k[0], k[1], k[2]); }, "triangle");
  for (float v : ds.signal.data())
    require(std::isfinite(v), ErrorCode::invalid_input, "non-finite value in nodes.csv");
  return ds;
}

// ---------------------------------------------------------------------------
// Masking

void MaskSpec::validate() const {
  require(point_rate >= 0.0 && point_rate <= 1.0 && block_prob >= 0.0 && block_prob <= 1.0,
          ErrorCode::invalid_input, "mask rates must lie in [0, 1]");
  require(block_min >= 1 && block_min <= block_max, ErrorCode::invalid_input,
          "block length bounds must satisfy 1 <= low <= high");
}

nlohmann::json to_json(const MaskSpec& m) {
  return {{"point_rate", m.point_rate}, {"block_prob", m.block_prob},
          {"block_min", m.block_min},   {"block_max", m.block_max},
          {"seed", m.seed}};
}

MaskSpec mask_spec_from_json(const nlohmann::json& j) {
  MaskSpec m;
  try {
    m.point_rate = j.value("point_rate", m.point_rate);
    m.block_prob = j.value("block_prob", m.block_prob);
    m.block_min = j.value("block_min", m.block_min);
    m.block_max = j.value("block_max", m.block_max);
    m.seed = j.value("seed", m.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_input, std::string("bad mask spec: ") + e.what());
  }
  m.validate();
  return m;
}

STTensor make_mask(const Shape& shape, const MaskSpec& spec, std::span<const BlockEvent> forced) {
  spec.validate();
  require(shape.size() == 3, ErrorCode::shape_error, "mask shape must be (N, T, F)");
  const std::size_t N = shape[0], T = shape[1], F = shape[2];
  STTensor m(shape);
  auto block = [&](std::size_t n, std::size_t start, std::size_t len) {
    for (std::size_t t = start; t < std::min(T, start + len); ++t)
      for (std::size_t f = 0; f < F; ++f) m[(n * T + t) * F + f] = 1.0f;
  };
  if (spec.point_rate > 0.0)
    for (std::size_t i = 0; i < m.size(); ++i)
      if (uniform_at(spec.seed, kPoint, i) < spec.point_rate) m[i] = 1.0f;
  if (spec.block_prob > 0.0)
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t t = 0; t < T; ++t) {
        const std::uint64_t k = n * T + t;
        if (uniform_at(spec.seed, kBlock, k) >= spec.block_prob) continue;
        const std::size_t span = spec.block_max - spec.block_min + 1;
        const auto len = spec.block_min +
                         std::min(span - 1, std::size_t(uniform_at(spec.seed, kBlockLen, k) * double(span)));
        block(n, t, len);
      }
  for (const auto& e : forced) {
    require(e.node < N && e.start < T, ErrorCode::invalid_input, "forced block outside the signal");
    block(e.node, e.start, e.length);
  }
  return m;
}

std::pair<STTensor, STTensor> apply_mask(const STTensor& signal, const MaskSpec& spec,
                                         std::span<const BlockEvent> forced) {
  STTensor mask = make_mask(signal.shape(), spec, forced);
  STTensor masked = signal;
  for (std::size_t i = 0; i < masked.size(); ++i)
    if (mask[i] != 0.0f) masked[i] = 0.0f;
  return {std::move(masked), std::move(mask)};
}

// ---------------------------------------------------------------------------
// Windows

std::vector<std::size_t> window_starts(TimeRange range, std::size_t W, std::size_t H, Task task) {
  const std::size_t need = task == Task::forecast ? W + H : W;
  require(W >= 1 && range.size() >= need, ErrorCode::invalid_input,
          "split of " + std::to_string(range.size()) + " steps is too short for windows of " +
              std::to_string(need));
  std::vector<std::size_t> out;
  for (std::size_t s = range.begin; s + need <= range.end; ++s) out.push_back(s);
  return out;
}

STTensor slice_time(const STTensor& x, std::size_t start, std::size_t len) {
  require(x.rank() == 3 && start + len <= x.dim(1), ErrorCode::shape_error,
          "time slice outside the signal");
  const std::size_t N = x.dim(0), T = x.dim(1), F = x.dim(2);
  STTensor out({N, len, F});
  for (std::size_t n = 0; n < N; ++n)
    std::copy_n(x.ptr() + (n * T + start) * F, len * F, out.ptr() + n * len * F);
  return out;
}

std::vector<Window> make_windows(const STTensor& signal, const STTensor* mask, TimeRange range,
                                 std::size_t W, std::size_t H, Task task) {
  std::vector<Window> out;
  for (std::size_t s : window_starts(range, W, H, task)) {
    Window w;
    w.start = s;
    w.input = slice_time(signal, s, W);
    if (task == Task::forecast) {
      w.target = slice_time(signal, s + W, H);
    } else {
      require(mask != nullptr, ErrorCode::invalid_input, "impute windows need a mask");
      w.target = w.input;
      w.mask = slice_time(*mask, s, W);
    }
    out.push_back(std::move(w));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

nlohmann::json to_json(const Metrics& m) {
  return {{"MAE", m.mae}, {"RMSE", m.rmse}, {"MRE", m.mre}, {"count", m.count}};
}

void MetricAccumulator::add(const STTensor& pred, const STTensor& target, const STTensor& mask) {
  require(pred.shape() == target.shape(), ErrorCode::shape_error,
          "prediction " + shape_str(pred.shape()) + " vs target " + shape_str(target.shape()));
  require(mask.empty() || mask.shape() == pred.shape(), ErrorCode::shape_error, "mask shape mismatch");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask.empty() && mask[i] == 0.0f) continue;
    const double e = double(pred[i]) - double(target[i]);
    abs_ += std::abs(e);
    sq_ += e * e;
    target_abs_ += std::abs(double(target[i]));
    ++count_;
  }
}

Metrics MetricAccumulator::result() const {
  require(count_ > 0, ErrorCode::empty_mask, "metrics selection is empty");
  require(target_abs_ > 0.0, ErrorCode::numeric_error,
          "MRE undefined: selected targets sum to zero");
  Metrics m;
  m.count = count_;
  m.mae = abs_ / double(count_);
  m.rmse = std::sqrt(sq_ / double(count_));
  m.mre = 100.0 * abs_ / target_abs_;
  return m;
}

Metrics metrics(const STTensor& pred, const STTensor& target, const STTensor& mask) {
  MetricAccumulator acc;
  acc.add(pred, target, mask);
  return acc.result();
}

STTensor persistence_forecast(const STTensor& input, std::size_t H) {
  require(input.rank() == 3 && input.dim(1) >= 1, ErrorCode::shape_error,
          "persistence needs an (N, W, F) window");
  const std::size_t N = input.dim(0), W = input.dim(1), F = input.dim(2);
  STTensor out({N, H, F});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t f = 0; f < F; ++f) out[(n * H + h) * F + f] = input[(n * W + W - 1) * F + f];
  return out;
}

STTensor node_means(const STTensor& signal, const STTensor* mask, TimeRange range) {
  require(signal.rank() == 3 && range.end <= signal.dim(1), ErrorCode::shape_error,
          "node means need an (N, T, F) signal");
  const std::size_t N = signal.dim(0), T = signal.dim(1), F = signal.dim(2);
  std::vector<double> sum(N * F, 0.0), all(F, 0.0);
  std::vector<std::size_t> cnt(N * F, 0), all_cnt(F, 0);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t t = range.begin; t < range.end; ++t)
      for (std::size_t f = 0; f < F; ++f) {
        const std::size_t i = (n * T + t) * F + f;
        if (mask && (*mask)[i] != 0.0f) continue;
        sum[n * F + f] += signal[i];
        ++cnt[n * F + f];
        all[f] += signal[i];
        ++all_cnt[f];
      }
  STTensor out({N, F});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t f = 0; f < F; ++f) {
      const std::size_t i = n * F + f;
      out[i] = cnt[i] ? float(sum[i] / double(cnt[i]))
                      : (all_cnt[f] ? float(all[f] / double(all_cnt[f])) : 0.0f);
    }
  return out;
}

STTensor mean_imputation(const STTensor& means, std::size_t W) {
  require(means.rank() == 2, ErrorCode::shape_error, "node means must be (N, F)");
  const std::size_t N = means.dim(0), F = means.dim(1);
  STTensor out({N, W, F});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t w = 0; w < W; ++w)
      for (std::size_t f = 0; f < F; ++f) out[(n * W + w) * F + f] = means[n * F + f];
  return out;
}

}  // namespace stsc
