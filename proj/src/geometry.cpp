#include "nanocav/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace nanocav {

const char* to_string(Region r) {
    switch (r) {
        case Region::Air: return "air";
        case Region::GaP: return "gap";
        case Region::Diamond: return "diamond";
    }
    return "?";
}

Violations validate(const Materials& mat) {
    Violations v;
    if (mat.n_gap < 1.0) v.push_back({"n_gap", "n_gap >= 1"});
    if (mat.n_dia < 1.0) v.push_back({"n_dia", "n_dia >= 1"});
    if (mat.n_air < 1.0) v.push_back({"n_air", "n_air >= 1"});
    if (!(mat.n_gap > mat.n_dia)) v.push_back({"n_gap", "n_gap > n_dia"});
    if (!(mat.n_dia > mat.n_air)) v.push_back({"n_dia", "n_dia > n_air"});
    return v;
}

Violations validate(const DeviceGeometry& geom) {
    Violations v;
    if (!(geom.outer_radius > 0)) v.push_back({"outer_radius", "outer_radius > 0"});
    if (!(geom.wall_width > 0)) v.push_back({"wall_width", "wall_width > 0"});
    if (!(geom.gap_thickness > 0)) v.push_back({"gap_thickness", "gap_thickness > 0"});
    if (!(geom.etch_depth > 0)) v.push_back({"etch_depth", "etch_depth > 0"});
    if (geom.wall_width > geom.outer_radius)
        v.push_back({"wall_width", "wall_width <= outer_radius"});
    return v;
}

Violations validate(const EmitterSpec& nv) {
    Violations v;
    const double norm = std::hypot(nv.dipole[0], nv.dipole[1], nv.dipole[2]);
    if (std::abs(norm - 1.0) > 1e-9) v.push_back({"dipole", "|dipole| = 1"});
    if (!(nv.zeta_zpl >= 0.0 && nv.zeta_zpl < 1.0))
        v.push_back({"zeta_zpl", "0 <= zeta_zpl < 1"});
    if (!(nv.depth_nm >= 0.0)) v.push_back({"depth_nm", "depth >= 0"});
    if (!(nv.tau_bulk_ns > 0.0)) v.push_back({"tau_bulk_ns", "tau_bulk > 0"});
    if (!(nv.radius_um >= 0.0)) v.push_back({"radius_um", "radius >= 0"});
    if (!(nv.lambda_zpl_nm > 0.0)) v.push_back({"lambda_zpl_nm", "lambda_zpl > 0"});
    return v;
}

Violations validate(const SimulationGrid& grid, const DeviceGeometry& geom,
                    double lambda_nm) {
    Violations v;
    if (!(grid.dr_nm > 0)) v.push_back({"dr_nm", "dr > 0"});
    if (!(grid.dz_nm > 0)) v.push_back({"dz_nm", "dz > 0"});
    if (grid.pml_cells < 8) v.push_back({"pml_cells", "pml_cells >= 8"});
    if (grid.r_min_um < 0) v.push_back({"r_min_um", "r_min >= 0"});
    if (!v.empty()) return v;

    const double pad = 0.5 * lambda_nm * 1e-3;
    const double pml_r = grid.pml_cells * grid.dr_nm * 1e-3;
    const double pml_z = grid.pml_cells * grid.dz_nm * 1e-3;
    const double tol = 1e-9;
    if (grid.r_max_um - pml_r < geom.outer_radius + pad - tol)
        v.push_back({"r_max_um", "r_max leaves lambda/2 padding outside the ring"});
    if (grid.z_max_um - pml_z < geom.gap_thickness + pad - tol)
        v.push_back({"z_max_um", "z_max leaves lambda/2 padding above the ring"});
    if (grid.z_min_um + pml_z > -geom.etch_depth - pad + tol)
        v.push_back({"z_min_um", "z_min leaves lambda/2 padding below the pedestal"});
    if (grid.r_min_um > 0 && grid.r_min_um >= geom.inner_radius())
        v.push_back({"r_min_um", "r_min < inner radius of the ring"});
    return v;
}

void require_valid(const Violations& v, const std::string& what) {
    if (v.empty()) return;
    std::ostringstream os;
    os << "invalid " << what << ":";
    for (const auto& x : v) os << " [" << x.field << ": " << x.rule << "]";
    throw std::invalid_argument(os.str());
}

Region region_at(const DeviceGeometry& geom, double r, double z) {
    r = std::abs(r);
    const bool under_ring = r >= geom.inner_radius() && r <= geom.outer_radius;
    if (z > geom.gap_thickness) return Region::Air;
    if (z >= 0.0) return under_ring ? Region::GaP : Region::Air;
    if (z >= -geom.etch_depth) return under_ring ? Region::Diamond : Region::Air;
    return Region::Diamond;
}

double refractive_index(Region region, const Materials& mat) {
    switch (region) {
        case Region::Air: return mat.n_air;
        case Region::GaP: return mat.n_gap;
        case Region::Diamond: return mat.n_dia;
    }
    return mat.n_air;
}

double permittivity_at(const DeviceGeometry& geom, const Materials& mat, double r, double z) {
    const double n = refractive_index(region_at(geom, r, z), mat);
    return n * n;
}

double evanescent_kappa(double lambda_nm, const Materials& mat) {
    if (!(mat.n_gap > mat.n_dia))
        throw std::domain_error("evanescent decay needs n_gap > n_dia");
    if (!(lambda_nm > 0)) throw std::invalid_argument("lambda must be positive");
    const double k0 = 2.0 * std::numbers::pi / (lambda_nm * 1e-3);
    return k0 * std::sqrt(mat.n_gap * mat.n_gap - mat.n_dia * mat.n_dia);
}

double evanescent_decay(double depth_nm, double lambda_nm, const Materials& mat) {
    if (depth_nm < 0) throw std::invalid_argument("depth must be non-negative");
    return std::exp(-2.0 * evanescent_kappa(lambda_nm, mat) * depth_nm * 1e-3);
}

SimulationGrid default_grid(const DeviceGeometry& geom, double dr_nm, double lambda_nm) {
    SimulationGrid g;
    g.dr_nm = dr_nm;
    g.dz_nm = dr_nm;
    const double h = dr_nm * 1e-3;
    const double pad = 0.5 * lambda_nm * 1e-3;
    const double pml = g.pml_cells * h;
    auto up = [h](double x) { return std::ceil(x / h - 1e-9) * h; };
    auto down = [h](double x) { return std::floor(x / h + 1e-9) * h; };
    g.r_max_um = up(geom.outer_radius + pad + pml);
    g.z_max_um = up(geom.gap_thickness + pad + pml);
    g.z_min_um = -up(geom.etch_depth + pad + pml);
    const double inner = geom.inner_radius();
    g.r_min_um = inner > 2.0 * h ? down(std::min(0.1, 0.5 * inner)) : 0.0;
    return g;
}

}  // namespace nanocav
