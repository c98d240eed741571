#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ot/solvers.hpp"

namespace ot {

/// Grayscale image in [0, 1]: pixel (column c, row r) lands at Array2(c, r),
/// so the image x axis is the grid x axis. Reads P2 (ASCII) and P5 (binary),
/// maxval up to 65535 (two-byte samples are big-endian per the format).
/// Malformed input throws ParseError carrying the byte offset.
Array2 read_pgm(const std::filesystem::path& path);

/// Writes values clamped to [0, 1], quantized to maxval steps. binary selects
/// P5 over P2; maxval above 255 uses two bytes per sample.
void write_pgm(const std::filesystem::path& path, const Array2& img, int maxval = 65535,
               bool binary = true);

/// Raw tensor snapshot of a centered field. Fixed layout, little-endian:
///   "OTDT"  u32 version=1  u32 d  u32 nt  u32 nx  u32 ny  u32 ncomp
/// then nt*nx*ny doubles for the density followed by ncomp such blocks for the
/// momentum components, each in storage order. Round-trips bitwise.
void write_otdt(const std::filesystem::path& path, const CenteredField& V);
CenteredField read_otdt(const std::filesystem::path& path);

/// Telemetry table. The header line is part of the format:
///   iter,J,min_f,div_residual,boundary_residual,delta_f
/// Values are written with round-trip precision.
void write_csv(const std::filesystem::path& path, const ConvergenceRecord& record);
ConvergenceRecord read_csv(const std::filesystem::path& path);

/// FNV-1a, 64-bit.
std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);

using Manifest = std::vector<std::pair<std::string, std::string>>;
void write_manifest(const std::filesystem::path& path, const Manifest& entries);
Manifest read_manifest(const std::filesystem::path& path);

/// Built-in endpoint pairs for quick runs; "gaussians" places two narrow blobs
/// (sigma = 0.04) in opposite corners. Unknown names throw ConfigError.
std::pair<Array2, Array2> demo_densities(const std::string& name, const GridDims& g);

/// Writes everything a run leaves behind into dir (created if needed):
///   density_momentum.otdt, telemetry.csv, frame_%03d.pgm (density slices,
///   normalized by the global max), manifest.txt (key=value; extra entries
///   first, then run facts, then a digest.<file> line per artifact).
/// Returns the files written, manifest last.
std::vector<std::filesystem::path> save_run(const std::filesystem::path& dir, const Problem& p,
                                            const SolverConfig& cfg, const SolveResult& res,
                                            const Manifest& extra = {});

/// Full command-line entry point. Returns the process exit code:
///   0 success, 2 rejected input or configuration, 3 numerical failure,
///   64 unusable command line.
int run_cli(int argc, const char* const* argv);

}  // namespace ot
