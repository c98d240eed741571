#pragma once

#include <array>
#include <vector>

#include "ot/array.hpp"
#include "ot/errors.hpp"

namespace ot {

/// Discretization parameters of the unit space-time box [0,1]^d x [0,1].
///
/// N, M, P are the number of cells per axis; sample counts are one more:
/// nx = N+1 points along x, ny = M+1 along y (d == 2 only), nt = P+1 in time.
struct GridDims {
  int d = 1;  // spatial dimension, 1 or 2
  int N = 0;  // x cells
  int M = 0;  // y cells (ignored when d == 1)
  int P = 0;  // time cells

  static GridDims line(int N, int P) { return GridDims{1, N, 0, P}; }
  static GridDims plane(int N, int M, int P) { return GridDims{2, N, M, P}; }

  int nx() const { return N + 1; }
  int ny() const { return d == 2 ? M + 1 : 1; }
  int nt() const { return P + 1; }

  /// Finite-difference scale of axis a (0 = x, 1 = y, 2 = time).
  double scale(int axis) const {
    return axis == 0 ? static_cast<double>(N)
                     : (axis == 1 ? static_cast<double>(M) : static_cast<double>(P));
  }

  std::size_t centered_size() const {
    return static_cast<std::size_t>(nx()) * ny() * nt();
  }

  void validate() const;  // throws DimensionError when out of contract

  bool operator==(const GridDims&) const = default;
};

/// Samples at grid points (x_i, t_j): d momentum components and a density,
/// all collocated on the (nx, ny, nt) lattice.
struct CenteredField {
  GridDims dims;
  std::vector<Array3> m;  // size dims.d
  Array3 f;

  static CenteredField zeros(const GridDims& g);
  void check_shape() const;

  CenteredField& operator+=(const CenteredField& o);
  CenteredField& operator-=(const CenteredField& o);
  CenteredField& operator*=(double a);
};

void axpy(CenteredField& y, double a, const CenteredField& x);
double dot(const CenteredField& a, const CenteredField& b);
double norm2_sq(const CenteredField& a);

/// Staggered samples: momentum component a sits on half-integer positions
/// along axis a only (one extra sample, two boundary slabs at stored index 0
/// and n_a), the density is staggered the same way along time. Stored index s
/// along the staggered axis corresponds to logical position s - 1/2.
struct StaggeredField {
  GridDims dims;
  std::vector<Array3> m;  // m[0]: (nx+1, ny, nt); m[1]: (nx, ny+1, nt)
  Array3 f;               // (nx, ny, nt+1)

  static StaggeredField zeros(const GridDims& g);
  void check_shape() const;

  StaggeredField& operator+=(const StaggeredField& o);
  StaggeredField& operator-=(const StaggeredField& o);
  StaggeredField& operator*=(double a);
};

void axpy(StaggeredField& y, double a, const StaggeredField& x);
double dot(const StaggeredField& a, const StaggeredField& b);
double norm2_sq(const StaggeredField& a);

/// Boundary trace of a staggered field: the momentum slabs at the spatial
/// walls (component a at the two walls normal to axis a) and the density
/// slabs at the temporal ends.
struct BoundaryValues {
  GridDims dims;
  // mslab[a][side]: side 0 = low wall, 1 = high wall.
  // axis 0 slabs are (ny, nt) arrays; axis 1 slabs are (nx, nt).
  std::array<std::array<Array2, 2>, 2> mslab;
  Array2 f0;  // (nx, ny) density at the initial time slab
  Array2 f1;  // (nx, ny) density at the final time slab

  static BoundaryValues zeros(const GridDims& g);
};

/// Read the boundary slabs out of U.
BoundaryValues extract_boundary(const StaggeredField& U);

/// Overwrite the boundary slabs of U with b. Inverse of extract_boundary on
/// the slab coordinates; interior samples are untouched.
void write_boundary(StaggeredField& U, const BoundaryValues& b);

/// Zero momentum slabs plus the two prescribed densities.
/// Throws ValidationError on negative entries, DimensionError on bad shapes.
BoundaryValues assemble_boundary_target(const GridDims& g, const Array2& f0, const Array2& f1);

/// Maximum absolute difference over all boundary coordinates.
double boundary_distance(const BoundaryValues& a, const BoundaryValues& b);

struct NormalizeReport {
  double mass0_before = 0.0;
  double mass1_before = 0.0;
  bool changed = false;
};

/// Clamp entries up to `floor` and rescale each density to unit mass, repeated
/// to a fixed point. Inputs already satisfying (min >= floor, |mass - 1| <= 1e-12)
/// are returned untouched, which makes the operation idempotent.
NormalizeReport validate_and_normalize(Array2& f0, Array2& f1, double floor_value);

/// Total mass of each time slice of a stack of spatial grids.
std::vector<double> mass_per_slice(const Array3& stack);

double total_mass(const Array2& g);

}  // namespace ot
