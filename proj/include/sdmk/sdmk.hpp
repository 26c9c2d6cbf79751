#pragma once

// Everything at once: meshes, FEM, solvers, DMK dynamics, sphere benchmark,
// metrics, VTK output and the command drivers.
#include "sdmk/errors.hpp"
#include "sdmk/geometry.hpp"
#include "sdmk/mesh.hpp"
#include "sdmk/refinement.hpp"
#include "sdmk/sparse.hpp"
#include "sdmk/fem.hpp"
#include "sdmk/solver.hpp"
#include "sdmk/dmk.hpp"
#include "sdmk/sphere.hpp"
#include "sdmk/metrics.hpp"
#include "sdmk/vtk.hpp"
#include "sdmk/driver.hpp"
