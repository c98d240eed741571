#include "ot/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

namespace fs = std::filesystem;

namespace ot {

static_assert(std::endian::native == std::endian::little,
              "raw tensor layout is little-endian; add byte swapping before porting");

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return buf;
}

std::string fmt_double(double x) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", x);
  return b;
}

bool is_pgm_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

struct Cursor {
  const std::string& buf;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos); }

  void skip_space_and_comments() {
    while (pos < buf.size()) {
      if (is_pgm_space(buf[pos])) {
        ++pos;
      } else if (buf[pos] == '#') {
        while (pos < buf.size() && buf[pos] != '\n') ++pos;
      } else {
        return;
      }
    }
  }

  long next_int(const char* what) {
    skip_space_and_comments();
    if (pos >= buf.size()) fail(std::string("expected ") + what + ", found end of file");
    if (buf[pos] < '0' || buf[pos] > '9') fail(std::string("expected ") + what);
    long v = 0;
    while (pos < buf.size() && buf[pos] >= '0' && buf[pos] <= '9') {
      v = v * 10 + (buf[pos] - '0');
      if (v > 1000000000L) fail(std::string(what) + " out of range");
      ++pos;
    }
    return v;
  }
};

}  // namespace

Array2 read_pgm(const fs::path& path) {
  const std::string buf = slurp(path);
  Cursor c{buf};
  if (buf.size() < 2 || buf[0] != 'P' || (buf[1] != '2' && buf[1] != '5'))
    c.fail("not a P2/P5 image");
  const bool binary = buf[1] == '5';
  c.pos = 2;
  const long w = c.next_int("width");
  const long h = c.next_int("height");
  const long maxval = c.next_int("maxval");
  if (w < 1 || h < 1) c.fail("image dimensions must be positive");
  if (maxval < 1 || maxval > 65535) c.fail("maxval must lie in [1, 65535]");
  Array2 img(static_cast<int>(w), static_cast<int>(h));
  const double inv = 1.0 / static_cast<double>(maxval);
  if (binary) {
    if (c.pos >= buf.size() || !is_pgm_space(buf[c.pos])) c.fail("expected whitespace after maxval");
    ++c.pos;
    const int bytes = maxval > 255 ? 2 : 1;
    const std::size_t need = static_cast<std::size_t>(w) * h * bytes;
    if (buf.size() - c.pos < need) {
      c.pos = buf.size();
      c.fail("raster truncated");
    }
    const unsigned char* p = reinterpret_cast<const unsigned char*>(buf.data()) + c.pos;
    for (long r = 0; r < h; ++r)
      for (long col = 0; col < w; ++col) {
        long v;
        if (bytes == 2) {
          v = (static_cast<long>(p[0]) << 8) | p[1];  // two-byte samples are big-endian
          p += 2;
        } else {
          v = *p++;
        }
        if (v > maxval) {
          c.pos = static_cast<std::size_t>(reinterpret_cast<const char*>(p) - buf.data()) - bytes;
          c.fail("sample exceeds maxval");
        }
        img(static_cast<int>(col), static_cast<int>(r)) = static_cast<double>(v) * inv;
      }
  } else {
    for (long r = 0; r < h; ++r)
      for (long col = 0; col < w; ++col) {
        const std::size_t at = c.pos;
        const long v = c.next_int("sample");
        if (v > maxval) throw ParseError("sample exceeds maxval", at);
        img(static_cast<int>(col), static_cast<int>(r)) = static_cast<double>(v) * inv;
      }
  }
  return img;
}

void write_pgm(const fs::path& path, const Array2& img, int maxval, bool binary) {
  if (img.n0 < 1 || img.n1 < 1) throw DimensionError("write_pgm: empty image");
  if (maxval < 1 || maxval > 65535) throw ValidationError("write_pgm: maxval must lie in [1, 65535]");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << (binary ? "P5" : "P2") << "\n" << img.n0 << " " << img.n1 << "\n" << maxval << "\n";
  auto quantize = [&](int col, int r) {
    const double x = std::clamp(img(col, r), 0.0, 1.0);
    return static_cast<long>(std::lround(x * maxval));
  };
  if (binary) {
    const int bytes = maxval > 255 ? 2 : 1;
    std::string raster;
    raster.reserve(static_cast<std::size_t>(img.n0) * img.n1 * bytes);
    for (int r = 0; r < img.n1; ++r)
      for (int col = 0; col < img.n0; ++col) {
        const long v = quantize(col, r);
        if (bytes == 2) raster.push_back(static_cast<char>((v >> 8) & 0xff));
        raster.push_back(static_cast<char>(v & 0xff));
      }
    out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  } else {
    for (int r = 0; r < img.n1; ++r) {
      for (int col = 0; col < img.n0; ++col) out << quantize(col, r) << (col + 1 < img.n0 ? ' ' : '\n');
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

constexpr char kMagic[4] = {'O', 'T', 'D', 'T'};
constexpr std::uint32_t kTensorVersion = 1;

void put_u32(std::string& s, std::uint32_t v) {
  s.append(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t get_u32(const std::string& buf, std::size_t at) {
  std::uint32_t v;
  std::memcpy(&v, buf.data() + at, 4);
  return v;
}

}  // namespace

void write_otdt(const fs::path& path, const CenteredField& V) {
  V.check_shape();
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kTensorVersion);
  put_u32(out, static_cast<std::uint32_t>(V.dims.d));
  put_u32(out, static_cast<std::uint32_t>(V.f.n2));  // time-first, storage order
  put_u32(out, static_cast<std::uint32_t>(V.f.n0));
  put_u32(out, static_cast<std::uint32_t>(V.f.n1));
  put_u32(out, static_cast<std::uint32_t>(V.m.size()));
  auto put_block = [&](const Array3& a) {
    out.append(reinterpret_cast<const char*>(a.v.data()), a.v.size() * sizeof(double));
  };
  put_block(V.f);
  for (const Array3& comp : V.m) put_block(comp);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

CenteredField read_otdt(const fs::path& path) {
  const std::string buf = slurp(path);
  if (buf.size() < 28) throw ParseError("tensor header truncated", buf.size());
  if (std::memcmp(buf.data(), kMagic, 4) != 0) throw ParseError("bad tensor magic", 0);
  if (get_u32(buf, 4) != kTensorVersion) throw ParseError("unsupported tensor version", 4);
  const std::uint32_t d = get_u32(buf, 8);
  const std::uint32_t nt = get_u32(buf, 12);
  const std::uint32_t nx = get_u32(buf, 16);
  const std::uint32_t ny = get_u32(buf, 20);
  const std::uint32_t ncomp = get_u32(buf, 24);
  if (d != 1 && d != 2) throw ParseError("spatial dimension must be 1 or 2", 8);
  if (ncomp != d) throw ParseError("component count must match the spatial dimension", 24);
  if (nt < 1 || nx < 1 || ny < 1 || (d == 1 && ny != 1))
    throw ParseError("inconsistent tensor dimensions", 12);
  GridDims g;
  g.d = static_cast<int>(d);
  g.N = static_cast<int>(nx) - 1;
  g.M = d == 2 ? static_cast<int>(ny) - 1 : 0;
  g.P = static_cast<int>(nt) - 1;
  try {
    g.validate();
  } catch (const Error& e) {
    throw ParseError(std::string("unsupported grid in tensor file: ") + e.what(), 12);
  }
  const std::size_t block = static_cast<std::size_t>(nt) * nx * ny;
  const std::size_t need = 28 + (1 + static_cast<std::size_t>(ncomp)) * block * sizeof(double);
  if (buf.size() != need) throw ParseError("tensor payload size mismatch", buf.size());
  CenteredField V = CenteredField::zeros(g);
  std::size_t at = 28;
  auto get_block = [&](Array3& a) {
    std::memcpy(a.v.data(), buf.data() + at, block * sizeof(double));
    at += block * sizeof(double);
  };
  get_block(V.f);
  for (Array3& comp : V.m) get_block(comp);
  return V;
}

namespace {
constexpr const char* kCsvHeader = "iter,J,min_f,div_residual,boundary_residual,delta_f";
}

void write_csv(const fs::path& path, const ConvergenceRecord& record) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << kCsvHeader << "\n";
  for (const ConvergenceRow& r : record.rows) {
    out << r.iter << ',' << fmt_double(r.J) << ',' << fmt_double(r.min_f) << ','
        << fmt_double(r.div_residual) << ',' << fmt_double(r.boundary_residual) << ','
        << fmt_double(r.delta_f) << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

ConvergenceRecord read_csv(const fs::path& path) {
  const std::string buf = slurp(path);
  ConvergenceRecord rec;
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < buf.size()) {
    std::size_t eol = buf.find('\n', pos);
    if (eol == std::string::npos) eol = buf.size();
    std::string line = buf.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!saw_header) {
      if (line != kCsvHeader) throw ParseError("telemetry header mismatch", pos);
      saw_header = true;
    } else if (!line.empty()) {
      ConvergenceRow row;
      double vals[5];
      const char* s = line.c_str();
      char* end = nullptr;
      row.iter = static_cast<int>(std::strtol(s, &end, 10));
      const char* cur = end;
      for (int k = 0; k < 5; ++k) {
        if (*cur != ',') throw ParseError("expected 6 comma-separated fields", pos);
        ++cur;
        vals[k] = std::strtod(cur, &end);
        if (end == cur) throw ParseError("malformed number in telemetry row", pos);
        cur = end;
      }
      if (*cur != '\0') throw ParseError("trailing characters in telemetry row", pos);
      row.J = vals[0];
      row.min_f = vals[1];
      row.div_residual = vals[2];
      row.boundary_residual = vals[3];
      row.delta_f = vals[4];
      rec.rows.push_back(row);
    }
    pos = eol + 1;
  }
  if (!saw_header) throw ParseError("empty telemetry file", 0);
  return rec;
}

std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t k = 0; k < n; ++k) {
    h ^= p[k];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t fnv1a64_file(const fs::path& path) {
  const std::string buf = slurp(path);
  return fnv1a64(buf.data(), buf.size());
}

void write_manifest(const fs::path& path, const Manifest& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& [k, v] : entries) out << k << '=' << v << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

Manifest read_manifest(const fs::path& path) {
  const std::string buf = slurp(path);
  Manifest m;
  std::size_t pos = 0;
  while (pos < buf.size()) {
    std::size_t eol = buf.find('\n', pos);
    if (eol == std::string::npos) eol = buf.size();
    std::string line = buf.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) {
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) throw ParseError("manifest line lacks '='", pos);
      m.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }
    pos = eol + 1;
  }
  return m;
}

std::pair<Array2, Array2> demo_densities(const std::string& name, const GridDims& g) {
  g.validate();
  if (name != "gaussians") throw ConfigError("unknown demo '" + name + "' (available: gaussians)");
  const double sigma = 0.04;
  const int nx = g.nx(), ny = g.ny();
  Array2 f0(nx, ny), f1(nx, ny);
  auto blob = [&](Array2& f, double cx, double cy) {
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) {
        const double x = static_cast<double>(i) / g.N;
        const double y = g.d == 2 ? static_cast<double>(j) / g.M : cy;
        const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        f(i, j) = std::exp(-r2 / (2.0 * sigma * sigma));
      }
  };
  blob(f0, 0.25, 0.25);
  blob(f1, 0.75, 0.75);
  return {std::move(f0), std::move(f1)};
}

namespace {

std::string grid_string(const GridDims& g) {
  return g.d == 2 ? std::to_string(g.N) + "x" + std::to_string(g.M) + "x" + std::to_string(g.P)
                  : std::to_string(g.N) + "x" + std::to_string(g.P);
}

}  // namespace

std::vector<fs::path> save_run(const fs::path& dir, const Problem& p, const SolverConfig& cfg,
                               const SolveResult& res, const Manifest& extra) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<fs::path> files;

  const fs::path tensor = dir / "density_momentum.otdt";
  write_otdt(tensor, res.V);
  files.push_back(tensor);

  const fs::path csv = dir / "telemetry.csv";
  write_csv(csv, res.record);
  files.push_back(csv);

  double gmax = 0.0;
  for (double x : res.V.f.v) gmax = std::max(gmax, x);
  const double inv = gmax > 0.0 ? 1.0 / gmax : 0.0;
  Array2 slice(res.V.f.n0, res.V.f.n1);
  for (int t = 0; t < res.V.f.n2; ++t) {
    for (int i = 0; i < slice.n0; ++i)
      for (int j = 0; j < slice.n1; ++j) slice(i, j) = res.V.f(i, j, t) * inv;
    char name[32];
    std::snprintf(name, sizeof name, "frame_%03d.pgm", t);
    const fs::path frame = dir / name;
    write_pgm(frame, slice);
    files.push_back(frame);
  }

  Manifest man = extra;
  man.emplace_back("solver", algorithm_name(cfg.algo));
  man.emplace_back("grid", grid_string(p.dims));
  man.emplace_back("beta", fmt_double(p.cost.beta));
  man.emplace_back("gamma", fmt_double(cfg.gamma));
  man.emplace_back("alpha", fmt_double(cfg.alpha));
  man.emplace_back("sigma", fmt_double(cfg.sigma));
  man.emplace_back("tau", fmt_double(cfg.tau));
  man.emplace_back("theta", fmt_double(cfg.theta));
  man.emplace_back("tol", fmt_double(cfg.tol));
  man.emplace_back("max_iters", std::to_string(cfg.max_iters));
  man.emplace_back("iters", std::to_string(res.iters));
  man.emplace_back("converged", res.converged ? "1" : "0");
  man.emplace_back("telemetry_rows", std::to_string(res.record.rows.size()));
  if (!res.record.rows.empty())
    man.emplace_back("final_J", fmt_double(res.record.rows.back().J));
  for (const fs::path& f : files) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(fnv1a64_file(f)));
    man.emplace_back("digest." + f.filename().string(), hex);
  }
  const fs::path manifest = dir / "manifest.txt";
  write_manifest(manifest, man);
  files.push_back(manifest);
  return files;
}

namespace {

GridDims parse_grid(const std::string& s) {
  std::vector<int> parts;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t x = s.find('x', pos);
    if (x == std::string::npos) x = s.size();
    const std::string tok = s.substr(pos, x - pos);
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError("bad --grid '" + s + "' (expected NxP or NxMxP)");
    parts.push_back(std::stoi(tok));
    pos = x + 1;
    if (x == s.size()) break;
  }
  GridDims g;
  if (parts.size() == 2) g = GridDims::line(parts[0], parts[1]);
  else if (parts.size() == 3) g = GridDims::plane(parts[0], parts[1], parts[2]);
  else throw ConfigError("bad --grid '" + s + "' (expected NxP or NxMxP)");
  g.validate();
  return g;
}

PoissonBackend parse_backend(const std::string& s) {
  if (s == "dct") return PoissonBackend::dct;
  if (s == "cg") return PoissonBackend::cg;
  throw ConfigError("unknown backend '" + s + "' (expected dct or cg)");
}

WeightMode parse_weight_mode(const std::string& s) {
  if (s == "uniform") return WeightMode::uniform;
  if (s == "obstacle") return WeightMode::obstacle;
  if (s == "distance") return WeightMode::distance;
  throw ConfigError("unknown weight mode '" + s + "' (expected uniform, obstacle or distance)");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"dynamic transport geodesics between grid densities"};
  std::string f0_path, f1_path, weights_path, demo;
  std::string grid_s = "32x32x32", solver_s = "a-dr", wmode_s = "uniform", backend_s = "dct",
              out_dir = "out";
  double gamma = 1.0 / 75.0, alpha = 1.998, sigma = 85.0, tau = 0.0, theta = 1.0, beta = 1.0,
         tol = 1e-8, floor_v = 1e-10;
  int iters = 1000, log_every = 1;
  std::uint64_t seed = 0;

  app.add_option("--f0", f0_path, "initial density (PGM image)");
  app.add_option("--f1", f1_path, "final density (PGM image)");
  app.add_option("--grid", grid_s, "cells per axis, NxMxP (planar) or NxP (line)")
      ->capture_default_str();
  app.add_option("--solver", solver_s, "a-dr, a-dr2, s-dr, s-dr2, pd or centered")
      ->capture_default_str();
  app.add_option("--gamma", gamma, "prox step")->capture_default_str();
  app.add_option("--alpha", alpha, "splitting relaxation in (0,2)")->capture_default_str();
  app.add_option("--sigma", sigma, "dual step (pd)")->capture_default_str();
  app.add_option("--tau", tau, "primal step (pd); 0 picks the largest stable value")
      ->capture_default_str();
  app.add_option("--theta", theta, "extrapolation (pd) in [0,1]")->capture_default_str();
  app.add_option("--beta", beta, "congestion exponent in [0,1]")->capture_default_str();
  app.add_option("--weights", weights_path, "impassable-cell mask (PGM, pixel > 1/2 blocks)");
  app.add_option("--weight-mode", wmode_s, "uniform, obstacle or distance")
      ->capture_default_str();
  app.add_option("--iters", iters, "iteration budget")->capture_default_str();
  app.add_option("--tol", tol, "relative iterate-change stop")->capture_default_str();
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--log-every", log_every, "telemetry stride")->capture_default_str();
  app.add_option("--floor", floor_v, "density floor applied before normalization")
      ->capture_default_str();
  app.add_option("--backend", backend_s, "constraint solver backend, dct or cg")
      ->capture_default_str();
  app.add_option("--seed", seed, "recorded in the manifest; the pipeline is deterministic")
      ->capture_default_str();
  app.add_option("--demo", demo, "built-in endpoint pair (gaussians); overrides --f0/--f1");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;
  }

  try {
    const GridDims dims = parse_grid(grid_s);
    SolverConfig cfg;
    cfg.algo = parse_algorithm(solver_s);
    cfg.gamma = gamma;
    cfg.alpha = alpha;
    cfg.sigma = sigma;
    cfg.tau = tau;
    cfg.theta = theta;
    cfg.max_iters = iters;
    cfg.tol = tol;
    cfg.log_every = log_every;
    cfg.backend = parse_backend(backend_s);
    cfg.validate();

    Array2 a0, a1;
    if (!demo.empty()) {
      std::tie(a0, a1) = demo_densities(demo, dims);
    } else {
      if (f0_path.empty() || f1_path.empty()) {
        std::cerr << "--f0 and --f1 are required unless --demo is given\n";
        return 64;
      }
      a0 = read_pgm(f0_path);
      a1 = read_pgm(f1_path);
      if (a0.n0 != dims.nx() || a0.n1 != dims.ny() || a1.n0 != dims.nx() || a1.n1 != dims.ny())
        throw DimensionError("endpoint images must be " + std::to_string(dims.nx()) + "x" +
                             std::to_string(dims.ny()) + " for --grid " + grid_s);
    }
    const NormalizeReport rep = validate_and_normalize(a0, a1, floor_v);

    CostModel cost;
    const WeightMode wmode = parse_weight_mode(wmode_s);
    if (wmode == WeightMode::uniform) {
      if (!weights_path.empty())
        throw ConfigError("--weights needs --weight-mode obstacle or distance");
      cost = CostModel::uniform(dims, beta);
    } else {
      if (weights_path.empty())
        throw ConfigError("--weight-mode " + wmode_s + " needs --weights");
      const Array2 mask_img = read_pgm(weights_path);
      if (mask_img.n0 != dims.nx() || mask_img.n1 != dims.ny())
        throw DimensionError("weights image must match the spatial grid");
      std::vector<std::uint8_t> mask(mask_img.v.size());
      for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = mask_img.v[k] > 0.5 ? 1 : 0;
      cost = build_weights_static(dims, mask, wmode, beta);
    }

    const Problem prob = Problem::from_densities(dims, a0, a1, std::move(cost));

    SolveResult res;
    try {
      res = solve(prob, cfg);
    } catch (const DivergenceError& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      std::error_code ec;
      fs::create_directories(out_dir, ec);
      if (!ec) write_csv(fs::path(out_dir) / "telemetry.csv", e.partial_record);
      return 3;
    }

    Manifest extra = {{"tool", "otflow"},
                      {"tool_version", "1.0.0"},
                      {"seed", std::to_string(seed)},
                      {"weight_mode", wmode_s},
                      {"backend", backend_s},
                      {"floor", fmt_double(floor_v)},
                      {"mass0_input", fmt_double(rep.mass0_before)},
                      {"mass1_input", fmt_double(rep.mass1_before)},
                      {"normalized", rep.changed ? "1" : "0"}};
    if (!demo.empty()) extra.emplace_back("demo", demo);
    const std::vector<fs::path> files = save_run(out_dir, prob, cfg, res, extra);

    std::cout << "solver=" << solver_s << " iters=" << res.iters
              << " converged=" << (res.converged ? 1 : 0);
    if (!res.record.rows.empty())
      std::cout << " J=" << fmt_double(res.record.rows.back().J)
                << " div_residual=" << fmt_double(res.record.rows.back().div_residual);
    std::cout << "\nwrote " << files.size() << " files to " << out_dir << "\n";
    return 0;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace ot
