/* C ABI for the wg-stokes weak Galerkin Stokes solver. */

#ifndef WG_STOKES_H
#define WG_STOKES_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes returned by every fallible function.
 */
typedef enum wg_status {
  WG_STATUS_OK = 0,
  /*
   A pointer argument that must not be NULL was NULL.
   */
  WG_STATUS_NULL_POINTER = 1,
  /*
   A string argument was not valid UTF-8.
   */
  WG_STATUS_INVALID_UTF8 = 2,
  /*
   Invalid configuration (unknown problem, bad tolerance, size
   mismatch, incompatible algorithm/problem pairing, ...).
   */
  WG_STATUS_INVALID_ARGUMENT = 3,
  /*
   Mesh construction or import failed.
   */
  WG_STATUS_MESH_ERROR = 4,
  /*
   The linear solver failed (stall, breakdown, indefiniteness).
   */
  WG_STATUS_SOLVER_ERROR = 5,
  /*
   The operation is not supported for this input.
   */
  WG_STATUS_UNSUPPORTED = 6,
  /*
   Filesystem I/O failed.
   */
  WG_STATUS_IO_ERROR = 7,
  /*
   An internal panic was caught at the ABI boundary.
   */
  WG_STATUS_PANIC = 8,
} wg_status;

/*
 A triangle mesh (opaque).
 */
typedef struct wg_mesh wg_mesh;

/*
 A Stokes problem: domain, data, and optional exact solution (opaque).
 */
typedef struct wg_problem wg_problem;

/*
 A computed discrete solution with its solve statistics (opaque).
 */
typedef struct wg_solution wg_solution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message describing the most recent failure on this thread. Never NULL;
 empty when nothing failed yet. Valid until the next failing call on the
 same thread.
 */
const char *wg_last_error_message(void);

/*
 Library version as a static string.
 */
const char *wg_version(void);

/*
 Build a structured unit-square mesh with 2 n^2 triangles. `northeast`
 selects the diagonal direction (nonzero: south-west to north-east).
 */
enum wg_status wg_mesh_unit_square(size_t n, int32_t northeast, struct wg_mesh **out);

/*
 Import a mesh from Triangle-format `.node` and `.ele` file contents.
 */
enum wg_status wg_mesh_import_triangle(const char *node_text,
                                       const char *ele_text,
                                       struct wg_mesh **out);

/*
 Uniformly refine: every triangle splits into four.
 */
enum wg_status wg_mesh_refine_uniform(const struct wg_mesh *mesh, struct wg_mesh **out);

/*
 Number of triangles. NULL yields 0.
 */
size_t wg_mesh_triangles(const struct wg_mesh *mesh);

/*
 Number of vertices. NULL yields 0.
 */
size_t wg_mesh_vertices(const struct wg_mesh *mesh);

/*
 Number of edges. NULL yields 0.
 */
size_t wg_mesh_edges(const struct wg_mesh *mesh);

/*
 Longest edge length. NULL yields NaN.
 */
double wg_mesh_h_max(const struct wg_mesh *mesh);

/*
 Copy vertex coordinates into `xy` as x0,y0,x1,y1,...; `len` must equal
 `2 * wg_mesh_vertices(mesh)`.
 */
enum wg_status wg_mesh_coordinates(const struct wg_mesh *mesh, double *xy, size_t len);

/*
 Copy triangle vertex indices into `indices` (three per triangle, ccw);
 `len` must equal `3 * wg_mesh_triangles(mesh)`.
 */
enum wg_status wg_mesh_connectivity(const struct wg_mesh *mesh, size_t *indices, size_t len);

/*
 Release a mesh handle (NULL is a no-op).
 */
void wg_mesh_free(struct wg_mesh *mesh);

/*
 Look up a built-in problem by id (`ex1` ... `ex6`). `reynolds` matters
 only for `ex3` and must then be positive.
 */
enum wg_status wg_problem_by_name(const char *name, double reynolds, struct wg_problem **out);

/*
 Does the problem carry an exact solution (so discretization errors can
 be measured)? NULL yields 0.
 */
int32_t wg_problem_has_exact(const struct wg_problem *problem);

/*
 Release a problem handle (NULL is a no-op).
 */
void wg_problem_free(struct wg_problem *problem);

/*
 Algorithm 1: preconditioned MINRES on the saddle-point system. Produces
 velocity and pressure.
 */
enum wg_status wg_solve_saddle(const struct wg_mesh *mesh,
                               const struct wg_problem *problem,
                               double tol,
                               struct wg_solution **out);

/*
 Algorithm 2: CG on the divergence-free subspace (homogeneous problems
 only). Recovers a pressure when `recover_pressure` is nonzero.
 */
enum wg_status wg_solve_divfree(const struct wg_mesh *mesh,
                                const struct wg_problem *problem,
                                double tol,
                                int32_t recover,
                                struct wg_solution **out);

/*
 Number of cells the solution lives on. NULL yields 0.
 */
size_t wg_solution_cells(const struct wg_solution *solution);

/*
 Krylov iterations used. NULL yields 0.
 */
size_t wg_solution_iterations(const struct wg_solution *solution);

/*
 Final true relative residual of the solve. NULL yields NaN.
 */
double wg_solution_relative_residual(const struct wg_solution *solution);

/*
 Does the solution carry a pressure field? NULL yields 0.
 */
int32_t wg_solution_has_pressure(const struct wg_solution *solution);

/*
 Copy the cell velocity averages into `xy` as ux0,uy0,ux1,uy1,...; `len`
 must equal `2 * wg_solution_cells(solution)`.
 */
enum wg_status wg_solution_velocity(const struct wg_solution *solution, double *xy, size_t len);

/*
 Copy the cell pressures into `p`; `len` must equal
 `wg_solution_cells(solution)`. Fails with `WG_STATUS_UNSUPPORTED` when no
 pressure was computed.
 */
enum wg_status wg_solution_pressure(const struct wg_solution *solution, double *p, size_t len);

/*
 Discretization errors against the problem's exact solution: writes the
 energy-norm velocity error, the L2 cell-velocity error, and the L2
 pressure error (NaN without a pressure field). Fails with
 `WG_STATUS_UNSUPPORTED` for problems without an exact solution.
 */
enum wg_status wg_solution_errors(const struct wg_solution *solution,
                                  double *triple,
                                  double *l2_velocity,
                                  double *l2_pressure);

/*
 Write the solution as a legacy ASCII VTK file. The mesh must be the one
 the solution was computed on. Solutions without a pressure field write
 zeros for pressure.
 */
enum wg_status wg_solution_write_vtk(const struct wg_solution *solution,
                                     const struct wg_mesh *mesh,
                                     const char *path);

/*
 Release a solution handle (NULL is a no-op).
 */
void wg_solution_free(struct wg_solution *solution);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WG_STOKES_H */
