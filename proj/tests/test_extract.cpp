#include <doctest.h>

#include <random>
#include <set>

#include "simto/extract.hpp"

using namespace simto;

namespace {

Eigen::Matrix2d rot2(double deg) {
    const double a = deg * M_PI / 180.0;
    Eigen::Matrix2d r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return r;
}

std::vector<Eigen::Vector2d> random_points(int n, std::mt19937& rng, double scale = 10.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<Eigen::Vector2d> pts(n);
    for (auto& p : pts) p = {u(rng), u(rng)};
    return pts;
}

// Minimal trace carrying handcrafted contacts on a rigidly moving finger.
SimTrace make_synthetic_trace(const std::vector<Eigen::Vector2d>& reference,
                              const std::vector<Eigen::Matrix2d>& rotations,
                              const std::vector<Eigen::Vector2d>& translations,
                              const std::vector<std::vector<ContactEvent>>& contacts) {
    SimTrace trace;
    trace.dt = 0.01;
    trace.mirror_x = 0.0;
    trace.left_reference = reference;
    for (size_t k = 0; k < rotations.size(); ++k) {
        SimStep s;
        s.time = (k + 1) * trace.dt;
        s.pos_left.resize(reference.size());
        for (size_t i = 0; i < reference.size(); ++i)
            s.pos_left[i] = rotations[k] * reference[i] + translations[k];
        s.pos_right = s.pos_left;  // unused when contacts only mention finger 0
        s.contacts = contacts[k];
        trace.steps.push_back(std::move(s));
    }
    return trace;
}

}  // namespace

TEST_CASE("kabsch: identity for identical point sets") {
    std::mt19937 rng(1);
    const auto pts = random_points(12, rng);
    const FrameAlignment fa = kabsch(pts, pts);
    CHECK((fa.rotation - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(fa.rmsd < 1e-12);
}

TEST_CASE("kabsch recovers a known rotation to 1e-9") {
    std::mt19937 rng(2);
    for (double deg : {37.0, -12.5, 120.0, 179.0}) {
        const auto ref = random_points(9, rng);
        const Eigen::Matrix2d R = rot2(deg);
        std::vector<Eigen::Vector2d> deformed(ref.size());
        for (size_t i = 0; i < ref.size(); ++i)
            deformed[i] = R * ref[i] + Eigen::Vector2d(3.0, -7.0);
        const FrameAlignment fa = kabsch(deformed, ref);
        // the recovered map sends deformed directions back to the reference
        CHECK((fa.rotation - R.transpose()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(fa.rmsd < 1e-9);
    }
}

TEST_CASE("kabsch picks the proper-rotation branch for reflected data") {
    std::mt19937 rng(3);
    const auto ref = random_points(8, rng);
    std::vector<Eigen::Vector2d> reflected(ref.size());
    for (size_t i = 0; i < ref.size(); ++i) reflected[i] = {-ref[i].x(), ref[i].y()};
    const FrameAlignment fa = kabsch(reflected, ref);
    CHECK(fa.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("kabsch works in 3D") {
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::vector<Eigen::Vector3d> ref(10);
    for (auto& p : ref) p = {u(rng), u(rng), u(rng)};
    Eigen::Matrix3d R =
        Eigen::AngleAxisd(0.7, Eigen::Vector3d(1.0, 2.0, -1.0).normalized()).toRotationMatrix();
    std::vector<Eigen::Vector3d> def(10);
    for (size_t i = 0; i < 10; ++i) def[i] = R * ref[i] + Eigen::Vector3d(1, 2, 3);
    const FrameAlignment fa = kabsch(def, ref);
    CHECK((fa.rotation - R.transpose()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("kabsch rejects degenerate configurations") {
    std::vector<Eigen::Vector2d> same(5, Eigen::Vector2d{1.0, 2.0});
    CHECK_THROWS_AS(kabsch(same, same), StructuralError);
}

TEST_CASE("keep_rule accepts presses that resist slip") {
    CHECK(keep_rule(Eigen::Vector2d{0.3, -0.5}));
    CHECK(!keep_rule(Eigen::Vector2d{-0.1, -0.5}));
    CHECK(!keep_rule(Eigen::Vector2d{0.3, 0.0}));  // strict inequality
    CHECK(!keep_rule(Eigen::Vector2d{0.0, -0.5}));
    CHECK(!keep_rule(Eigen::Vector2d{0.3, 0.5}));
}

TEST_CASE("update_raw_set is magnitude-maximal per node") {
    RawForceSet set;
    const Eigen::Vector3d p{1.0, 2.0, 0.0};
    update_raw_set(set, 7, p, {1.0, -1.0, 0.0});
    REQUIRE(set.size() == 1);
    CHECK(set.entries.at(7).magnitude == doctest::Approx(std::sqrt(2.0)));

    update_raw_set(set, 7, p, {2.0, -2.0, 1.0});  // magnitude 3 > sqrt(2): replace
    CHECK(set.entries.at(7).force.z() == doctest::Approx(1.0));

    update_raw_set(set, 7, p, {0.0, -3.0, 0.0});  // magnitude 3 == 3: keep incumbent
    CHECK(set.entries.at(7).force.x() == doctest::Approx(2.0));

    update_raw_set(set, 9, p, {0.5, -0.1, 0.0});  // new node: insert
    CHECK(set.size() == 2);
}

TEST_CASE("reduce rounds, groups, averages and zeroes the out-of-plane part") {
    SUBCASE("single 3D entry") {
        RawForceSet raw;
        update_raw_set(raw, 1, {10.2, 5.4, 1.0}, {1.0, -1.0, 0.5});
        const ContactLoadSet out = reduce(raw);
        REQUIRE(out.size() == 1);
        CHECK(out.loads[0].position.x() == 10.0);
        CHECK(out.loads[0].position.y() == 5.0);
        CHECK(out.loads[0].force.x() == doctest::Approx(1.0));
        CHECK(out.loads[0].force.y() == doctest::Approx(-1.0));
        CHECK(out.loads[0].weight == doctest::Approx(std::sqrt(2.0)));
    }
    SUBCASE("two entries sharing a rounded (x, y)") {
        RawForceSet raw;
        update_raw_set(raw, 1, {9.8, 5.0, 2.0}, {2.0, -2.0, 1.0});
        update_raw_set(raw, 2, {10.2, 5.4, 7.0}, {0.0, -4.0, -1.0});
        const ContactLoadSet out = reduce(raw);
        REQUIRE(out.size() == 1);
        CHECK(out.loads[0].position.x() == 10.0);
        CHECK(out.loads[0].position.y() == 5.0);
        CHECK(out.loads[0].force.x() == doctest::Approx(1.0));
        CHECK(out.loads[0].force.y() == doctest::Approx(-3.0));
    }
    SUBCASE("distinct rounded positions reduce to a no-op beyond rounding") {
        RawForceSet raw;
        std::mt19937 rng(5);
        std::uniform_real_distribution<double> u(0.6, 2.0);
        for (int i = 0; i < 12; ++i)
            update_raw_set(raw, i, {3.0 * i + 0.2, 1.0, 0.0}, {u(rng), -u(rng), 0.0});
        const ContactLoadSet out = reduce(raw);
        CHECK(out.size() == 12);
    }
    SUBCASE("groups averaging to zero are dropped with a warning") {
        RawForceSet raw;
        update_raw_set(raw, 1, {4.0, 4.0, 0.0}, {1.0, -1.0, 0.0});
        update_raw_set(raw, 2, {4.1, 4.1, 0.0}, {-1.0, 1.0, 0.0});
        update_raw_set(raw, 3, {9.0, 2.0, 0.0}, {0.5, -0.5, 0.0});
        std::vector<std::string> warnings;
        const ContactLoadSet out = reduce(raw, &warnings);
        CHECK(out.size() == 1);
        CHECK(warnings.size() == 1);
    }
}

TEST_CASE("reduce is idempotent on already-reduced sets") {
    RawForceSet raw;
    update_raw_set(raw, 1, {3.0, 4.0, 0.0}, {1.0, -2.0, 0.0});
    update_raw_set(raw, 2, {8.0, 1.0, 0.0}, {0.5, -0.25, 0.0});
    const ContactLoadSet once = reduce(raw);
    RawForceSet again;
    for (int i = 0; i < once.size(); ++i)
        update_raw_set(again, i,
                       {once.loads[i].position.x(), once.loads[i].position.y(), 0.0},
                       {once.loads[i].force.x(), once.loads[i].force.y(), 0.0});
    const ContactLoadSet twice = reduce(again);
    REQUIRE(twice.size() == once.size());
    for (int i = 0; i < once.size(); ++i) {
        CHECK(twice.loads[i].position == once.loads[i].position);
        CHECK((twice.loads[i].force - once.loads[i].force).norm() < 1e-12);
    }
}

TEST_CASE("extract with zero contacts raises the empty-load error") {
    std::mt19937 rng(6);
    const auto ref = random_points(6, rng);
    SimTrace trace = make_synthetic_trace(
        ref, {Eigen::Matrix2d::Identity()}, {Eigen::Vector2d::Zero()}, {{}});
    CHECK_THROWS_AS(extract(trace, ref), EmptyLoadSet);
}

TEST_CASE("extract matches a brute-force rule replay on a synthetic trace") {
    std::mt19937 rng(7);
    const auto ref = random_points(10, rng, 20.0);
    // three steps with known rigid rotations of the finger
    std::vector<Eigen::Matrix2d> rots = {rot2(0.0), rot2(15.0), rot2(-9.0)};
    std::vector<Eigen::Vector2d> trans = {{0, 0}, {2, 1}, {-1, 4}};
    std::uniform_real_distribution<double> uf(-2.0, 2.0);
    std::uniform_int_distribution<int> un(0, 9);
    std::vector<std::vector<ContactEvent>> contacts(3);
    for (int k = 0; k < 3; ++k) {
        for (int j = 0; j < 6; ++j) {
            ContactEvent ev;
            ev.finger = 0;
            ev.node = un(rng);
            ev.force = rots[k] * Eigen::Vector2d(uf(rng), uf(rng));  // world frame
            ev.point = rots[k] * ref[ev.node] + trans[k];
            contacts[k].push_back(ev);
        }
    }
    SimTrace trace = make_synthetic_trace(ref, rots, trans, contacts);

    // oracle: replay every rule with plain loops and the known rotations
    std::map<int, std::pair<Eigen::Vector2d, double>> oracle_raw;  // node -> (force_R, mag)
    for (int k = 0; k < 3; ++k) {
        for (const auto& ev : contacts[k]) {
            const Eigen::Vector2d f_ref = rots[k].transpose() * ev.force;
            if (!(f_ref.y() < 0.0 && f_ref.x() > 0.0)) continue;
            const double mag = f_ref.norm();
            auto it = oracle_raw.find(ev.node);
            if (it == oracle_raw.end())
                oracle_raw[ev.node] = {f_ref, mag};
            else if (mag > it->second.second)
                it->second = {f_ref, mag};
        }
    }
    struct Group {
        Eigen::Vector2d sum{0.0, 0.0};
        int count = 0;
    };
    std::map<std::pair<long, long>, Group> oracle_groups;
    for (const auto& [node, entry] : oracle_raw) {
        const auto key = std::make_pair(std::lround(ref[node].x()), std::lround(ref[node].y()));
        auto& g = oracle_groups[key];
        g.sum += entry.first;
        g.count += 1;
    }

    bool any = !oracle_raw.empty();
    if (!any) {
        CHECK_THROWS_AS(extract(trace, ref, {false, nullptr}), EmptyLoadSet);
        return;
    }
    ExtractOptions opt;
    opt.use_both_fingers = false;
    const ContactLoadSet out = extract(trace, ref, opt);
    REQUIRE(out.size() == static_cast<int>(oracle_groups.size()));
    int i = 0;
    for (const auto& [key, g] : oracle_groups) {
        const Eigen::Vector2d avg = g.sum / g.count;
        CHECK(out.loads[i].position.x() == static_cast<double>(key.first));
        CHECK(out.loads[i].position.y() == static_cast<double>(key.second));
        CHECK((out.loads[i].force - avg).norm() < 1e-10);
        ++i;
    }
}

TEST_CASE("rigid-body motion: extracted forces equal world forces unrotated") {
    std::mt19937 rng(8);
    const auto ref = random_points(8, rng, 15.0);
    const Eigen::Matrix2d R = rot2(25.0);
    ContactEvent ev;
    ev.finger = 0;
    ev.node = 3;
    ev.force = R * Eigen::Vector2d(0.8, -1.1);  // known kept force in the reference frame
    ev.point = R * ref[3] + Eigen::Vector2d(5, 5);
    SimTrace trace = make_synthetic_trace(ref, {R}, {{5, 5}}, {{ev}});
    ExtractOptions opt;
    opt.use_both_fingers = false;
    const ContactLoadSet out = extract(trace, ref, opt);
    REQUIRE(out.size() == 1);
    CHECK(out.loads[0].force.x() == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(out.loads[0].force.y() == doctest::Approx(-1.1).epsilon(1e-9));
}

TEST_CASE("global rotation of the deformed trace leaves the extraction unchanged") {
    std::mt19937 rng(9);
    const auto ref = random_points(10, rng, 12.0);
    std::vector<ContactEvent> events;
    for (int j = 0; j < 5; ++j) {
        ContactEvent ev;
        ev.finger = 0;
        ev.node = j;
        ev.force = {0.5 + 0.1 * j, -1.0 - 0.2 * j};
        ev.point = ref[j];
        events.push_back(ev);
    }
    SimTrace base =
        make_synthetic_trace(ref, {Eigen::Matrix2d::Identity()}, {{0, 0}}, {events});
    ExtractOptions opt;
    opt.use_both_fingers = false;
    const ContactLoadSet a = extract(base, ref, opt);

    const Eigen::Matrix2d G = rot2(73.0);
    std::vector<ContactEvent> rotated = events;
    for (auto& ev : rotated) {
        ev.force = G * ev.force;
        ev.point = G * ev.point;
    }
    SimTrace turned = make_synthetic_trace(ref, {G}, {{0, 0}}, {rotated});
    const ContactLoadSet b = extract(turned, ref, opt);

    REQUIRE(a.size() == b.size());
    for (int i = 0; i < a.size(); ++i) {
        CHECK(a.loads[i].position == b.loads[i].position);
        CHECK((a.loads[i].force - b.loads[i].force).norm() < 1e-8);
        CHECK(a.loads[i].weight == doctest::Approx(b.loads[i].weight).epsilon(1e-8));
    }
}

TEST_CASE("raw-set update is order-insensitive across distinct nodes") {
    std::mt19937 rng(10);
    std::uniform_real_distribution<double> uf(0.1, 2.0);
    std::vector<std::tuple<int, Eigen::Vector3d, Eigen::Vector3d>> updates;
    for (int i = 0; i < 30; ++i) {
        const int node = i % 7;
        updates.push_back({node, Eigen::Vector3d(node, node, 0.0),
                           Eigen::Vector3d(uf(rng), -uf(rng), 0.0)});
    }
    RawForceSet fwd, rev;
    for (const auto& [n, p, f] : updates) update_raw_set(fwd, n, p, f);
    for (auto it = updates.rbegin(); it != updates.rend(); ++it)
        update_raw_set(rev, std::get<0>(*it), std::get<1>(*it), std::get<2>(*it));
    REQUIRE(fwd.size() == rev.size());
    for (const auto& [n, e] : fwd.entries)
        CHECK(e.magnitude == doctest::Approx(rev.entries.at(n).magnitude).epsilon(1e-15));
    // magnitude-maximal per node
    for (const auto& [n, e] : fwd.entries) {
        double best = 0.0;
        for (const auto& [un, up, uf_] : updates)
            if (un == n) best = std::max(best, uf_.norm());
        CHECK(e.magnitude == doctest::Approx(best).epsilon(1e-15));
    }
}

TEST_CASE("extraction outputs land on the millimetre grid with positive weights") {
    std::mt19937 rng(11);
    const auto ref = random_points(12, rng, 25.0);
    std::vector<ContactEvent> events;
    std::uniform_int_distribution<int> un(0, 11);
    for (int j = 0; j < 20; ++j) {
        ContactEvent ev;
        ev.finger = 0;
        ev.node = un(rng);
        ev.force = {0.3 + 0.05 * j, -0.7 - 0.03 * j};
        ev.point = ref[ev.node];
        events.push_back(ev);
    }
    SimTrace trace =
        make_synthetic_trace(ref, {Eigen::Matrix2d::Identity()}, {{0, 0}}, {events});
    ExtractOptions opt;
    opt.use_both_fingers = false;
    const ContactLoadSet out = extract(trace, ref, opt);
    int distinct_nodes = 0;
    {
        std::set<int> nodes;
        for (const auto& ev : events) nodes.insert(ev.node);
        distinct_nodes = static_cast<int>(nodes.size());
    }
    CHECK(out.size() <= distinct_nodes);  // N_f <= N~_f
    for (const auto& lc : out.loads) {
        CHECK(lc.position.x() == std::round(lc.position.x()));
        CHECK(lc.position.y() == std::round(lc.position.y()));
        CHECK(lc.weight > 0.0);
    }
}
