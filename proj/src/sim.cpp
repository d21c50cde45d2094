#include "simto/sim.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <set>

#include "simto/errors.hpp"
#include "simto/parallel.hpp"

namespace simto {

int SimConfig::steps() const {
    if (N_t > 0) return N_t;
    int n = static_cast<int>(std::ceil(t / 0.0025));
    if (n % 2) ++n;
    return std::max(n, 2);
}

void SimConfig::validate() const {
    if (!(E_g > 0.0) || !(E_o > 0.0)) throw StructuralError("SimConfig: moduli must be > 0");
    if (!(nu_g >= 0.0 && nu_g < 0.5) || !(nu_o >= 0.0 && nu_o < 0.5))
        throw StructuralError("SimConfig: Poisson ratio outside [0, 0.5)");
    if (d_c < 0.0 || d_l < 0.0) throw StructuralError("SimConfig: distances must be >= 0");
    if (!(t > 0.0)) throw StructuralError("SimConfig: duration must be > 0");
    const int n = steps();
    if (n < 2 || n % 2 != 0) throw StructuralError("SimConfig: N_t must be even and >= 2");
    if (friction_mu < 0.0) throw StructuralError("SimConfig: friction_mu must be >= 0");
    if (!(material_density > 0.0)) throw StructuralError("SimConfig: density must be > 0");
    if (constitutive != "corotational")
        throw StructuralError("SimConfig: unknown constitutive model '" + constitutive + "'");
}

namespace {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

Mat2 rot2(double deg) {
    const double a = deg * M_PI / 180.0;
    Mat2 r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return r;
}

struct Body {
    int id = 0;  // 0 left finger, 1 right finger, 2 object
    std::vector<Vec2> X;     // reference positions in world mm (after placement)
    std::vector<Vec2> x, v;  // current state
    std::vector<std::array<int, 3>> tris;
    std::vector<std::array<int, 2>> bedges;
    std::vector<int> bnodes;
    std::vector<uint8_t> driven, is_input_port;
    std::vector<int> gnode;  // global free-node index or -1
    std::vector<double> mass;  // tonnes
    std::vector<double> blen;  // tributary boundary length, mm
    std::vector<Mat2> Bm;
    std::vector<double> area;
    std::vector<Eigen::Matrix<double, 6, 6>> Ke;
    std::vector<Mat2> R;
    Eigen::Matrix3d D;         // plane-stress constitutive, MPa
    Vec2 drive_dir{0.0, 0.0};  // compression direction (toward the object)
};

Eigen::Matrix3d plane_stress_d(double e_mpa, double nu) {
    Eigen::Matrix3d d;
    const double c = e_mpa / (1.0 - nu * nu);
    d << c, c * nu, 0.0, c * nu, c, 0.0, 0.0, 0.0, c * (1.0 - nu) / 2.0;
    return d;
}

// Per-triangle reference data; call after the mesh is in its final placement.
Body make_body(int id, const std::vector<Vec2>& nodes,
               const std::vector<std::array<int, 3>>& tris,
               const std::vector<std::array<int, 2>>& bedges, const std::vector<int>& bnodes,
               double e_mpa, double nu, double rho_t) {
    Body body;
    body.id = id;
    body.X = nodes;
    body.tris = tris;
    body.bedges = bedges;
    body.bnodes = bnodes;
    body.driven.assign(nodes.size(), 0);
    body.is_input_port.assign(nodes.size(), 0);
    body.D = plane_stress_d(e_mpa, nu);

    const size_t nt = tris.size();
    body.Bm.resize(nt);
    body.area.resize(nt);
    body.Ke.resize(nt);
    body.R.assign(nt, Mat2::Identity());
    body.mass.assign(nodes.size(), 0.0);
    for (size_t ti = 0; ti < nt; ++ti) {
        const auto& t = tris[ti];
        const Vec2 p0 = nodes[t[0]], p1 = nodes[t[1]], p2 = nodes[t[2]];
        Mat2 dm;
        dm.col(0) = p1 - p0;
        dm.col(1) = p2 - p0;
        const double det = dm.determinant();
        if (!(det > 0.0)) throw StructuralError("simulate: inverted reference triangle");
        body.area[ti] = 0.5 * det;
        body.Bm[ti] = dm.inverse();
        const double x13 = p0.x() - p2.x(), x21 = p1.x() - p0.x(), x32 = p2.x() - p1.x();
        const double y12 = p0.y() - p1.y(), y23 = p1.y() - p2.y(), y31 = p2.y() - p0.y();
        Eigen::Matrix<double, 3, 6> B = Eigen::Matrix<double, 3, 6>::Zero();
        const double f = 1.0 / det;
        B(0, 0) = y23 * f; B(0, 2) = y31 * f; B(0, 4) = y12 * f;
        B(1, 1) = x32 * f; B(1, 3) = x13 * f; B(1, 5) = x21 * f;
        B(2, 0) = x32 * f; B(2, 1) = y23 * f;
        B(2, 2) = x13 * f; B(2, 3) = y31 * f;
        B(2, 4) = x21 * f; B(2, 5) = y12 * f;
        body.Ke[ti] = body.area[ti] * B.transpose() * body.D * B;
        const double mnode = rho_t * body.area[ti] / 3.0;
        for (int k = 0; k < 3; ++k) body.mass[t[k]] += mnode;
    }
    body.blen.assign(nodes.size(), 0.0);
    for (const auto& e : bedges) {
        const double len = (nodes[e[1]] - nodes[e[0]]).norm();
        body.blen[e[0]] += 0.5 * len;
        body.blen[e[1]] += 0.5 * len;
    }
    body.x = body.X;
    body.v.assign(nodes.size(), Vec2::Zero());
    return body;
}

struct Contact {
    const Body* node_body = nullptr;
    const Body* edge_body = nullptr;  // null for the rigid ground
    int node = -1;
    int edge_a = -1, edge_b = -1;
    double w_a = 0.0, w_b = 0.0;
    Vec2 normal{0.0, 0.0};  // outward from the edge body
    Vec2 point{0.0, 0.0};
    double depth = 0.0;
};

bool inside_body(const Vec2& p, const Body& body) {
    bool inside = false;
    for (const auto& e : body.bedges) {
        const Vec2& a = body.x[e[0]];
        const Vec2& b = body.x[e[1]];
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            const double xc = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
            if (p.x() < xc) inside = !inside;
        }
    }
    return inside;
}

// Penetrating nodes carry positive depth; nodes within `margin` outside the
// surface are emitted with negative depth (Jacobian-only, no force).
void detect_contacts(const Body& node_body, const Body& edge_body, std::vector<Contact>& out,
                     double margin) {
    Eigen::AlignedBox2d box;
    for (int n : edge_body.bnodes) box.extend(edge_body.x[n]);
    box.min() -= Vec2(margin, margin);
    box.max() += Vec2(margin, margin);
    for (int n : node_body.bnodes) {
        const Vec2 p = node_body.x[n];
        if (!box.contains(p)) continue;
        const bool inside = inside_body(p, edge_body);
        double best_d2 = 1e300;
        Contact c;
        Vec2 edge_normal{0.0, 0.0};
        for (const auto& e : edge_body.bedges) {
            const Vec2& a = edge_body.x[e[0]];
            const Vec2& b = edge_body.x[e[1]];
            const Vec2 ab = b - a;
            const double len2 = ab.squaredNorm();
            double s = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
            s = std::clamp(s, 0.0, 1.0);
            const Vec2 proj = a + s * ab;
            const double d2 = (p - proj).squaredNorm();
            if (d2 < best_d2) {
                best_d2 = d2;
                c.edge_a = e[0];
                c.edge_b = e[1];
                c.w_a = 1.0 - s;
                c.w_b = s;
                c.point = proj;
                const Vec2 tau = ab.normalized();
                edge_normal = Vec2(tau.y(), -tau.x());  // outward for CCW interiors
            }
        }
        const double dist = std::sqrt(best_d2);
        if (!inside && dist >= margin) continue;
        // The outward direction follows the projection point, which slides
        // continuously around boundary corners; the raw edge normal would
        // flip between the two edges of a corner and stall the Newton loop.
        if (dist > 1e-9)
            c.normal = inside ? Vec2((c.point - p) / dist) : Vec2((p - c.point) / dist);
        else
            c.normal = edge_normal;
        c.node_body = &node_body;
        c.edge_body = &edge_body;
        c.node = n;
        c.depth = inside ? dist : -dist;
        out.push_back(c);
    }
}

// margin > 0 also emits near-contact entries (depth <= 0); they carry no
// force but contribute the penalty block to the Jacobian so Newton
// anticipates the ground before activation.
void detect_ground(const Body& object, double ground_y, std::vector<Contact>& out,
                   double margin = 0.0) {
    for (int n : object.bnodes) {
        const double depth = ground_y - object.x[n].y();
        if (depth <= -margin) continue;
        Contact c;
        c.node_body = &object;
        c.node = n;
        c.depth = depth;
        c.normal = Vec2(0.0, 1.0);
        c.point = Vec2(object.x[n].x(), ground_y);
        out.push_back(c);
    }
}

struct ContactParams {
    double k = 0.0;  // N/mm^3
    double mu = 0.0;
    double v_smooth = 1.0;   // mm/s
    double ground_y = 0.0;
    double smooth_mm = 0.05;  // half-width of the C1 activation blend
};

// C1-smoothed penalty: zero below -m, quadratic blend on [-m, m], linear
// beyond. Keeping force and stiffness continuous lets Newton cross contact
// activation without chattering.
double penalty_magnitude(double depth, double k, double m, double* slope) {
    if (depth <= -m) {
        if (slope) *slope = 0.0;
        return 0.0;
    }
    if (depth >= m) {
        if (slope) *slope = k;
        return k * depth;
    }
    const double t = depth + m;
    if (slope) *slope = k * t / (2.0 * m);
    return k * t * t / (4.0 * m);
}

// Penalty normal force plus tanh-capped Coulomb friction, acting on the
// penetrating node (reaction on the edge nodes).
Vec2 contact_force(const Contact& c, const ContactParams& prm, double* fn_out = nullptr,
                   double* ft_out = nullptr) {
    const double fn = penalty_magnitude(c.depth, prm.k * c.node_body->blen[c.node],
                                        prm.smooth_mm, nullptr);
    Vec2 v_edge = Vec2::Zero();
    if (c.edge_body) v_edge = c.w_a * c.edge_body->v[c.edge_a] + c.w_b * c.edge_body->v[c.edge_b];
    const Vec2 t(c.normal.y(), -c.normal.x());
    const double vt = (c.node_body->v[c.node] - v_edge).dot(t);
    const double ft = -prm.mu * fn * std::tanh(vt / prm.v_smooth);
    if (fn_out) *fn_out = fn;
    if (ft_out) *ft_out = ft;
    return fn * c.normal + ft * t;
}

struct System {
    std::vector<Body*> bodies;
    int nfree = 0;
    Eigen::SparseMatrix<double> H;
    std::vector<std::array<int, 36>> tri_slots;
    std::vector<int> tri_offset;
    std::vector<std::array<int, 4>> diag_slots;  // xx, yx, xy, yy of each free node
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool analyzed = false;
    // contact coupling pairs of free nodes accumulated over the simulation;
    // the sparsity pattern is rebuilt (and re-analyzed) whenever a pair is new
    std::set<std::pair<int, int>> contact_pairs;
    bool pattern_dirty = true;
    // per-triangle scratch shared by the assembly passes of one simulation
    std::vector<Eigen::Matrix<double, 6, 1>> fel;
    std::vector<Eigen::Matrix<double, 6, 6>> hel;
};

int slot_of(const Eigen::SparseMatrix<double>& m, int row, int col) {
    const int* outer = m.outerIndexPtr();
    const int* inner = m.innerIndexPtr();
    const int* it = std::lower_bound(inner + outer[col], inner + outer[col + 1], row);
    return static_cast<int>(it - inner);
}

void rebuild_pattern(System& sys) {
    const int ndof = 2 * sys.nfree;
    std::vector<Eigen::Triplet<double>> trips;
    for (Body* b : sys.bodies)
        for (const auto& t : b->tris)
            for (int a = 0; a < 3; ++a) {
                const int ga = b->gnode[t[a]];
                if (ga < 0) continue;
                for (int c = 0; c < 3; ++c) {
                    const int gc = b->gnode[t[c]];
                    if (gc < 0) continue;
                    for (int da = 0; da < 2; ++da)
                        for (int dc = 0; dc < 2; ++dc)
                            trips.emplace_back(2 * ga + da, 2 * gc + dc, 1.0);
                }
            }
    for (const auto& [a, c] : sys.contact_pairs)
        for (int da = 0; da < 2; ++da)
            for (int dc = 0; dc < 2; ++dc) {
                trips.emplace_back(2 * a + da, 2 * c + dc, 1.0);
                trips.emplace_back(2 * c + da, 2 * a + dc, 1.0);
            }
    sys.H.resize(ndof, ndof);
    sys.H.setFromTriplets(trips.begin(), trips.end());
    sys.H.makeCompressed();

    sys.tri_offset.clear();
    int tri_total = 0;
    for (Body* b : sys.bodies) {
        sys.tri_offset.push_back(tri_total);
        tri_total += static_cast<int>(b->tris.size());
    }
    sys.tri_slots.assign(tri_total, {});
    for (size_t bi = 0; bi < sys.bodies.size(); ++bi) {
        Body* b = sys.bodies[bi];
        for (size_t ti = 0; ti < b->tris.size(); ++ti) {
            auto& slots = sys.tri_slots[sys.tri_offset[bi] + ti];
            const auto& t = b->tris[ti];
            for (int a = 0; a < 3; ++a)
                for (int da = 0; da < 2; ++da)
                    for (int c = 0; c < 3; ++c)
                        for (int dc = 0; dc < 2; ++dc) {
                            const int ga = b->gnode[t[a]], gc = b->gnode[t[c]];
                            slots[(2 * a + da) * 6 + (2 * c + dc)] =
                                (ga >= 0 && gc >= 0) ? slot_of(sys.H, 2 * ga + da, 2 * gc + dc)
                                                     : -1;
                        }
        }
    }
    sys.diag_slots.assign(sys.nfree, {-1, -1, -1, -1});
    for (int g = 0; g < sys.nfree; ++g)
        sys.diag_slots[g] = {slot_of(sys.H, 2 * g, 2 * g), slot_of(sys.H, 2 * g + 1, 2 * g),
                             slot_of(sys.H, 2 * g, 2 * g + 1),
                             slot_of(sys.H, 2 * g + 1, 2 * g + 1)};
    sys.pattern_dirty = false;
    sys.analyzed = false;
}

void build_system(System& sys) {
    int counter = 0;
    for (Body* b : sys.bodies) {
        b->gnode.assign(b->X.size(), -1);
        for (size_t i = 0; i < b->X.size(); ++i)
            if (!b->driven[i]) b->gnode[i] = counter++;
    }
    sys.nfree = counter;
    rebuild_pattern(sys);
}

// Register the free-node coupling pairs of one contact; returns true when a
// new pair extends the pattern.
bool register_contact_pairs(System& sys, const Contact& c) {
    int gids[3];
    int n_ids = 0;
    const int gn = c.node_body->gnode[c.node];
    if (gn >= 0) gids[n_ids++] = gn;
    if (c.edge_body) {
        const int ga = c.edge_body->gnode[c.edge_a];
        const int gb = c.edge_body->gnode[c.edge_b];
        if (ga >= 0) gids[n_ids++] = ga;
        if (gb >= 0) gids[n_ids++] = gb;
    }
    bool grew = false;
    for (int i = 0; i < n_ids; ++i)
        for (int j = i + 1; j < n_ids; ++j) {
            const auto key = std::minmax(gids[i], gids[j]);
            if (sys.contact_pairs.emplace(key.first, key.second).second) grew = true;
        }
    return grew;
}

// Corotational elastic and damping forces; optionally scatters the warped
// stiffness blocks scaled by jac_scale into the matrix values.
void elastic_pass(System& sys, double beta, Eigen::VectorXd& force, double* hvals,
                  double jac_scale) {
    for (size_t bi = 0; bi < sys.bodies.size(); ++bi) {
        Body* b = sys.bodies[bi];
        const int ntris = static_cast<int>(b->tris.size());
        auto& fel = sys.fel;
        auto& hel = sys.hel;
        if (static_cast<int>(fel.size()) < ntris) fel.resize(ntris);
        if (hvals && static_cast<int>(hel.size()) < ntris) hel.resize(ntris);
        parallel_for(ntris, [&](std::ptrdiff_t ti) {
            const auto& t = b->tris[ti];
            Mat2 ds;
            ds.col(0) = b->x[t[1]] - b->x[t[0]];
            ds.col(1) = b->x[t[2]] - b->x[t[0]];
            const Mat2 F = ds * b->Bm[ti];
            const double a = F(0, 0) + F(1, 1);
            const double s = F(1, 0) - F(0, 1);
            const double r = std::hypot(a, s);
            if (r > 1e-12) {
                Mat2 R;
                R << a / r, -s / r, s / r, a / r;
                b->R[ti] = R;
            }
            const Mat2 R = b->R[ti];
            Eigen::Matrix<double, 6, 1> u, vel;
            for (int k = 0; k < 3; ++k) {
                const Vec2 w = R.transpose() * b->x[t[k]] - b->X[t[k]];
                u[2 * k] = w.x();
                u[2 * k + 1] = w.y();
                vel[2 * k] = b->v[t[k]].x();
                vel[2 * k + 1] = b->v[t[k]].y();
            }
            const auto& ke = b->Ke[ti];
            Eigen::Matrix<double, 6, 6> RK;
            for (int br = 0; br < 3; ++br)
                for (int bc = 0; bc < 3; ++bc)
                    RK.block<2, 2>(2 * br, 2 * bc) =
                        R * ke.block<2, 2>(2 * br, 2 * bc) * R.transpose();
            const Eigen::Matrix<double, 6, 1> keu = ke * u;
            Eigen::Matrix<double, 6, 1> f;
            for (int k = 0; k < 3; ++k) {
                const Vec2 fe = -(R * Vec2(keu[2 * k], keu[2 * k + 1]));
                f[2 * k] = fe.x();
                f[2 * k + 1] = fe.y();
            }
            f -= beta * (RK * vel);
            fel[ti] = f;
            if (hvals) hel[ti] = jac_scale * RK;
        });
        for (int ti = 0; ti < ntris; ++ti) {
            const auto& t = b->tris[ti];
            for (int k = 0; k < 3; ++k) {
                const int g = b->gnode[t[k]];
                if (g < 0) continue;
                force[2 * g] += fel[ti][2 * k];
                force[2 * g + 1] += fel[ti][2 * k + 1];
            }
            if (hvals) {
                const auto& slots = sys.tri_slots[sys.tri_offset[bi] + ti];
                for (int q = 0; q < 36; ++q)
                    if (slots[q] >= 0) hvals[slots[q]] += hel[ti](q / 6, q % 6);
            }
        }
    }
}

void apply_contact(const Contact& c, const ContactParams& prm, Eigen::VectorXd& force,
                   double* hvals, const System& sys, double inv_h) {
    double fn = 0.0;
    const Vec2 f = contact_force(c, prm, &fn);
    const Body& nb = *c.node_body;
    auto add_force = [&](const Body& body, int node, const Vec2& fv) {
        const int g = body.gnode[node];
        if (g < 0) return;
        force[2 * g] += fv.x();
        force[2 * g + 1] += fv.y();
    };
    add_force(nb, c.node, f);
    if (c.edge_body) {
        add_force(*c.edge_body, c.edge_a, -c.w_a * f);
        add_force(*c.edge_body, c.edge_b, -c.w_b * f);
    }
    if (!hvals) return;

    // Frozen-geometry contact Hessian: with the nearest edge, its normal and
    // the barycentric weights held fixed, the gap is linear in the stacked
    // positions g = [n, -w_a n, -w_b n], giving the exact penalty block
    // k a g g^T plus the friction damping along the tangent direction.
    const Vec2 n = c.normal;
    const Vec2 t(n.y(), -n.x());
    Vec2 v_edge = Vec2::Zero();
    if (c.edge_body) v_edge = c.w_a * c.edge_body->v[c.edge_a] + c.w_b * c.edge_body->v[c.edge_b];
    const double vt = (nb.v[c.node] - v_edge).dot(t);
    const double th = std::tanh(vt / prm.v_smooth);
    double k_n = 0.0;
    penalty_magnitude(c.depth, prm.k * nb.blen[c.node], prm.smooth_mm, &k_n);
    const double k_t = prm.mu * fn / prm.v_smooth * (1.0 - th * th) * inv_h;

    const Body* bodies[3] = {&nb, c.edge_body, c.edge_body};
    const int nodes[3] = {c.node, c.edge_a, c.edge_b};
    const double coeff[3] = {1.0, -c.w_a, -c.w_b};
    const int count = c.edge_body ? 3 : 1;
    const Mat2 blk_n = n * n.transpose();
    const Mat2 blk_t = t * t.transpose();
    for (int i = 0; i < count; ++i) {
        const int gi = bodies[i]->gnode[nodes[i]];
        if (gi < 0) continue;
        for (int j = 0; j < count; ++j) {
            const int gj = bodies[j]->gnode[nodes[j]];
            if (gj < 0) continue;
            const double w = coeff[i] * coeff[j];
            const Mat2 blk = (k_n * w) * blk_n + (k_t * w) * blk_t;
            for (int di = 0; di < 2; ++di)
                for (int dj = 0; dj < 2; ++dj)
                    hvals[slot_of(sys.H, 2 * gi + di, 2 * gj + dj)] += blk(di, dj);
        }
    }
}

}  // namespace

SimTrace simulate(const BodyMesh& left_finger, const BodyMesh& object, const Pose& pose_g,
                  const Pose& pose_o, const SimConfig& config) {
    config.validate();
    left_finger.validate();
    object.validate();
    if (left_finger.fixed_port_nodes.empty() && left_finger.input_port_nodes.empty())
        throw StructuralError("simulate: finger mesh carries no port nodes");

    const double e_g_mpa = config.E_g * 1e-6;
    const double e_o_mpa = config.E_o * 1e-6;
    const double rho_t = config.material_density * 1e-12;  // tonne/mm^3
    const double g_mm = config.gravity * 1e3;              // mm/s^2
    const double k_contact =
        (config.contact_stiffness > 0.0 ? config.contact_stiffness * 1e-6 : 50.0 * e_g_mpa);

    // --- object placement: center on the mid-axis, rest on the ground, apply
    // the pose about the centroid, add the seeded jitter, re-drop if below
    // the ground ---------------------------------------------------------
    std::vector<Vec2> obj_nodes(object.nodes.begin(), object.nodes.end());
    {
        Eigen::AlignedBox2d box;
        for (const auto& p : obj_nodes) box.extend(p);
        for (auto& p : obj_nodes)
            p -= Vec2(box.center().x(), box.min().y() - config.ground_y);
        Vec2 centroid = Vec2::Zero();
        for (const auto& p : obj_nodes) centroid += p;
        centroid /= static_cast<double>(obj_nodes.size());
        const Mat2 R = rot2(pose_o.rotation_deg);
        for (auto& p : obj_nodes) p = R * (p - centroid) + centroid;
        std::mt19937_64 rng(config.seed);
        std::uniform_real_distribution<double> jit(-config.jitter_mm, config.jitter_mm);
        const Vec2 shift = pose_o.translation + Vec2(jit(rng), jit(rng));
        for (auto& p : obj_nodes) p += shift;
        double min_y = 1e300;
        for (const auto& p : obj_nodes) min_y = std::min(min_y, p.y());
        if (min_y < config.ground_y)
            for (auto& p : obj_nodes) p.y() += config.ground_y - min_y;
    }
    Body obj = make_body(2, obj_nodes, object.triangles, object.boundary_edges,
                         object.boundary_nodes, e_o_mpa, config.nu_o, rho_t);
    double obj_half_width = 0.0;
    for (const auto& p : obj.X) obj_half_width = std::max(obj_half_width, std::abs(p.x()));

    // --- finger placement: design frame rotated +90 degrees so +x(design) is
    // the lift direction and -y(design) faces the object ------------------
    Mat2 q0;
    q0 << 0.0, -1.0, 1.0, 0.0;
    const Vec2 t_left(-(obj_half_width + config.standoff), config.base_height);
    const Mat2 pose_rot = rot2(pose_g.rotation_deg);
    const double finger_len = left_finger.bounding_box().sizes().x();
    const Vec2 grip_center(0.0, config.base_height + 0.5 * finger_len);

    std::vector<Vec2> left_nodes(left_finger.nodes.size());
    std::vector<Vec2> right_nodes(left_finger.nodes.size());
    for (size_t i = 0; i < left_finger.nodes.size(); ++i) {
        Vec2 p = q0 * left_finger.nodes[i] + t_left;
        Vec2 pm(-p.x(), p.y());
        left_nodes[i] = pose_rot * (p - grip_center) + grip_center + pose_g.translation;
        right_nodes[i] = pose_rot * (pm - grip_center) + grip_center + pose_g.translation;
    }
    auto flipped = [](std::vector<std::array<int, 3>> tris) {
        for (auto& t : tris) std::swap(t[1], t[2]);
        return tris;
    };
    auto reversed = [](std::vector<std::array<int, 2>> edges) {
        for (auto& e : edges) std::swap(e[0], e[1]);
        return edges;
    };
    Body left = make_body(0, left_nodes, left_finger.triangles, left_finger.boundary_edges,
                          left_finger.boundary_nodes, e_g_mpa, config.nu_g, rho_t);
    Body right = make_body(1, right_nodes, flipped(left_finger.triangles),
                           reversed(left_finger.boundary_edges), left_finger.boundary_nodes,
                           e_g_mpa, config.nu_g, rho_t);
    left.drive_dir = pose_rot * Vec2(1.0, 0.0);
    right.drive_dir = pose_rot * Vec2(-1.0, 0.0);
    const double mirror_x = pose_g.translation.x();

    for (Body* b : {&left, &right}) {
        for (int n : left_finger.fixed_port_nodes) b->driven[n] = 1;
        for (int n : left_finger.input_port_nodes) {
            b->driven[n] = 1;
            b->is_input_port[n] = 1;
        }
    }

    System sys;
    sys.bodies = {&left, &right, &obj};
    build_system(sys);
    const int ndof = 2 * sys.nfree;
    if (ndof == 0) throw StructuralError("simulate: no free degrees of freedom");

    const int n_steps = config.steps();
    const double h = config.t / n_steps;
    const double inv_h = 1.0 / h;
    // The tanh stick zone must span several Newton increments in position
    // units (v * h), or the iteration chatters across the friction reversal;
    // 0.05 mm per step sets the effective floor.
    const double v_smooth_eff = std::max(config.friction_smooth_v, 0.05 * inv_h);
    const ContactParams prm{k_contact, config.friction_mu, v_smooth_eff, config.ground_y};

    Eigen::VectorXd mass(ndof);
    for (Body* b : sys.bodies)
        for (size_t i = 0; i < b->X.size(); ++i)
            if (b->gnode[i] >= 0) {
                mass[2 * b->gnode[i]] = b->mass[i];
                mass[2 * b->gnode[i] + 1] = b->mass[i];
            }
    Eigen::VectorXd gravity_force = Eigen::VectorXd::Zero(ndof);
    for (int i = 0; i < sys.nfree; ++i) gravity_force[2 * i + 1] = -mass[2 * i + 1] * g_mm;

    auto driven_target = [&](const Body& b, size_t node, int step) -> Vec2 {
        Vec2 p = b.X[node];
        if (b.is_input_port[node])
            p += b.drive_dir * (2.0 * config.d_c / n_steps * std::min(step, n_steps / 2));
        p.y() += 2.0 * config.d_l / n_steps * std::max(0, step - n_steps / 2);
        return p;
    };
    auto gather_state = [&](Eigen::VectorXd& out) {
        for (Body* b : sys.bodies)
            for (size_t i = 0; i < b->X.size(); ++i)
                if (b->gnode[i] >= 0) {
                    out[2 * b->gnode[i]] = b->x[i].x();
                    out[2 * b->gnode[i] + 1] = b->x[i].y();
                }
    };
    auto scatter_state = [&](const Eigen::VectorXd& in) {
        for (Body* b : sys.bodies)
            for (size_t i = 0; i < b->X.size(); ++i)
                if (b->gnode[i] >= 0) b->x[i] = Vec2(in[2 * b->gnode[i]], in[2 * b->gnode[i] + 1]);
    };
    auto scatter_velocity = [&](const Eigen::VectorXd& xn, const Eigen::VectorXd& xc) {
        for (Body* b : sys.bodies)
            for (size_t i = 0; i < b->X.size(); ++i)
                if (b->gnode[i] >= 0) {
                    const int g = b->gnode[i];
                    b->v[i] = Vec2(xc[2 * g] - xn[2 * g], xc[2 * g + 1] - xn[2 * g + 1]) * inv_h;
                }
    };

    auto evaluate = [&](Eigen::VectorXd& residual, const Eigen::VectorXd& x_cur,
                        const Eigen::VectorXd& x_pred, bool with_jacobian,
                        std::vector<Contact>* events, std::vector<Contact>* ground_events) {
        std::vector<Contact> contacts;
        const double margin = 0.5;
        detect_contacts(left, obj, contacts, margin);
        detect_contacts(obj, left, contacts, margin);
        detect_contacts(right, obj, contacts, margin);
        detect_contacts(obj, right, contacts, margin);
        std::vector<Contact> ground;
        detect_ground(obj, prm.ground_y, ground, 0.5);
        for (const auto& c : contacts)
            if (register_contact_pairs(sys, c)) sys.pattern_dirty = true;

        double* hvals = nullptr;
        if (with_jacobian) {
            if (sys.pattern_dirty) rebuild_pattern(sys);
            hvals = sys.H.valuePtr();
            std::fill(hvals, hvals + sys.H.nonZeros(), 0.0);
        }
        Eigen::VectorXd force = gravity_force;
        elastic_pass(sys, config.rayleigh_beta, force, hvals, 1.0 + config.rayleigh_beta * inv_h);

        for (const auto& c : contacts) apply_contact(c, prm, force, hvals, sys, inv_h);
        for (const auto& c : ground) apply_contact(c, prm, force, hvals, sys, inv_h);
        if (events) *events = std::move(contacts);
        if (ground_events) *ground_events = std::move(ground);

        residual = mass.cwiseProduct(x_cur - x_pred) * (inv_h * inv_h) - force;
        if (with_jacobian) {
            for (int g = 0; g < sys.nfree; ++g) {
                const auto& s = sys.diag_slots[g];
                hvals[s[0]] += mass[2 * g] * inv_h * inv_h;
                hvals[s[3]] += mass[2 * g + 1] * inv_h * inv_h;
            }
        }
    };

    SimTrace trace;
    trace.config = config;
    trace.dt = h;
    trace.mirror_x = mirror_x;
    trace.left_reference.assign(left_finger.nodes.begin(), left_finger.nodes.end());
    trace.object_node_mass = obj.mass;
    trace.steps.reserve(n_steps);

    Eigen::VectorXd x_n(ndof), x_cur(ndof), x_pred(ndof), residual(ndof), r_try(ndof);
    gather_state(x_n);
    Eigen::VectorXd v_n = Eigen::VectorXd::Zero(ndof);

    for (int step = 1; step <= n_steps; ++step) {
        for (Body* b : {&left, &right}) {
            for (size_t i = 0; i < b->X.size(); ++i) {
                if (!b->driven[i]) continue;
                const Vec2 prev = driven_target(*b, i, step - 1);
                const Vec2 next = driven_target(*b, i, step);
                b->x[i] = next;
                b->v[i] = (next - prev) * inv_h;
            }
        }
        x_pred = x_n + h * v_n;
        x_cur = x_pred;
        scatter_state(x_cur);
        scatter_velocity(x_n, x_cur);

        evaluate(residual, x_cur, x_pred, true, nullptr, nullptr);
        const double r0 = residual.norm();
        const double tol = std::max(1e-7, config.newton_rel_tol * r0);
        double r_norm = r0;
        bool converged = r_norm <= tol;

        for (int it = 0; it < config.newton_max_iters && !converged; ++it) {
            if (!sys.analyzed) {
                sys.ldlt.analyzePattern(sys.H);
                sys.analyzed = true;
            }
            sys.ldlt.factorize(sys.H);
            if (sys.ldlt.info() != Eigen::Success)
                throw NumericalError("simulate: Newton factorization failed at step " +
                                     std::to_string(step));
            Eigen::VectorXd delta = sys.ldlt.solve(-residual);
            // Trust region: the warped-stiffness Jacobian is only locally
            // valid, so cap the increment at half an element edge.
            const double dmax = delta.lpNorm<Eigen::Infinity>();
            if (dmax > 0.5) delta *= 0.5 / dmax;
            // Backtracking keeps the best trial; a contact activating inside
            // the step can transiently raise the residual, in which case the
            // best trial is still taken and later iterations, now carrying
            // the contact block in H, resolve it.
            double alpha = 1.0;
            Eigen::VectorXd best_x = x_cur + delta;
            double best_norm = std::numeric_limits<double>::infinity();
            for (int ls = 0; ls < 6; ++ls) {
                const Eigen::VectorXd x_try = x_cur + alpha * delta;
                scatter_state(x_try);
                scatter_velocity(x_n, x_try);
                evaluate(r_try, x_try, x_pred, false, nullptr, nullptr);
                const double nrm = r_try.norm();
                if (nrm < best_norm) {
                    best_norm = nrm;
                    best_x = x_try;
                }
                if (nrm < r_norm) break;
                alpha *= 0.5;
            }
            x_cur = best_x;
            scatter_state(x_cur);
            scatter_velocity(x_n, x_cur);
            evaluate(residual, x_cur, x_pred, true, nullptr, nullptr);
            r_norm = residual.norm();
            converged = r_norm <= tol;
#ifdef SIM_DEBUG
            if (const char* dbg = std::getenv("SIM_DEBUG_STEP"); dbg && step == std::atoi(dbg)) {
                std::vector<Contact> cs, gs;
                Eigen::VectorXd tmp(ndof);
                evaluate(tmp, x_cur, x_pred, false, &cs, &gs);
                int pen = 0;
                double maxd = 0.0;
                for (const auto& cc : cs)
                    if (cc.depth > 0) { ++pen; maxd = std::max(maxd, cc.depth); }
                int arg = 0;
                residual.cwiseAbs().maxCoeff(&arg);
                std::fprintf(stderr, "  it%d r=%.4e argdof=%d contacts=%d pen=%d maxd=%.4f alpha=%.3f\n",
                             it, r_norm, arg, int(cs.size()), pen, maxd, alpha);
            }
#endif
        }
#ifdef SIM_DEBUG
        if (!converged)
            std::fprintf(stderr, "step %d: r0=%.4e r=%.4e tol=%.2e\n", step, r0, r_norm, tol);
#endif
        if (!converged && !(r_norm < r0))
            throw NumericalError("simulate: Newton residual not reduced at step " +
                                 std::to_string(step));

        std::vector<Contact> contacts, ground;
        evaluate(residual, x_cur, x_pred, false, &contacts, &ground);
        if (!x_cur.allFinite())
            throw NumericalError("simulate: state diverged at step " + std::to_string(step));

        SimStep rec;
        rec.time = step * h;
        rec.object_grounded = false;
        for (const auto& c : ground)
            if (c.depth > -prm.smooth_mm) rec.object_grounded = true;
        for (const auto& c : contacts) {
            double fn = 0.0, ft = 0.0;
            const Vec2 f = contact_force(c, prm, &fn, &ft);
            if (!(fn > 0.0)) continue;  // proximal entries carry no force
            const bool node_is_finger = c.node_body->id <= 1;
            ContactEvent ev;
            ev.finger = node_is_finger ? c.node_body->id : c.edge_body->id;
            if (node_is_finger) {
                ev.node = c.node;
                ev.point = c.node_body->x[c.node];
                ev.force = -f;  // reaction on the object
            } else {
                ev.node = c.w_a >= c.w_b ? c.edge_a : c.edge_b;
                ev.point = c.point;
                ev.force = f;
            }
            ev.normal_mag = fn;
            ev.tangent_mag = std::abs(ft);
            ev.depth = c.depth;
            rec.contacts.push_back(ev);
        }
        {
            const int nt = static_cast<int>(obj.tris.size());
            Eigen::ArrayXd vm(nt);
            parallel_for(nt, [&](std::ptrdiff_t ti) {
                const auto& t = obj.tris[ti];
                Mat2 ds;
                ds.col(0) = obj.x[t[1]] - obj.x[t[0]];
                ds.col(1) = obj.x[t[2]] - obj.x[t[0]];
                const Mat2 S = obj.R[ti].transpose() * (ds * obj.Bm[ti]);
                const double exx = S(0, 0) - 1.0, eyy = S(1, 1) - 1.0;
                const double gxy = S(0, 1) + S(1, 0);
                const Eigen::Vector3d sig = obj.D * Eigen::Vector3d(exx, eyy, gxy);
                vm[ti] = std::sqrt(sig[0] * sig[0] + sig[1] * sig[1] - sig[0] * sig[1] +
                                   3.0 * sig[2] * sig[2]);
            });
            rec.object_peak_vm = nt > 0 ? vm.maxCoeff() : 0.0;
        }
        if (config.record_positions) {
            rec.pos_left = left.x;
            rec.pos_right = right.x;
            rec.pos_object = obj.x;
        }
        trace.steps.push_back(std::move(rec));

        // Corotational linear elements recover from transient inversion (the
        // warped energy keeps pushing back toward the rest shape); only deep
        // inversion counts as unrecoverable.
        for (Body* b : sys.bodies)
            for (size_t ti = 0; ti < b->tris.size(); ++ti) {
                const auto& t = b->tris[ti];
                Mat2 ds;
                ds.col(0) = b->x[t[1]] - b->x[t[0]];
                ds.col(1) = b->x[t[2]] - b->x[t[0]];
                if ((ds * b->Bm[ti]).determinant() < -1.5)
                    throw NumericalError("simulate: element inversion beyond recovery at step " +
                                         std::to_string(step));
            }

        v_n = (x_cur - x_n) * inv_h;
        x_n = x_cur;
    }
    return trace;
}

GraspOutcome grasp_outcome(const SimTrace& trace) {
    if (trace.steps.empty()) throw StructuralError("grasp_outcome: empty trace");
    GraspOutcome out;
    int lifted = 0;
    double peak = 0.0;
    for (const auto& s : trace.steps) {
        if (!s.contacts.empty() && !s.object_grounded) ++lifted;
        peak = std::max(peak, s.object_peak_vm);
    }
    const auto& last = trace.steps.back();
    out.success = !last.contacts.empty() && !last.object_grounded;
    out.lift_time = lifted * trace.dt;
    out.peak_stress = peak * 1e6;  // MPa -> Pa
    return out;
}

}  // namespace simto
