#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "accflow/core.hpp"

using namespace accflow;

namespace {

FlowField random_field(int w, int h, std::mt19937& rng, float amplitude = 10.0f) {
    FlowField f(w, h);
    std::uniform_real_distribution<float> dist(-amplitude, amplitude);
    for (float& c : f.data()) c = dist(rng);
    return f;
}

FlowField random_integer_field(int w, int h, std::mt19937& rng, int amplitude) {
    FlowField f(w, h);
    std::uniform_int_distribution<int> dist(-amplitude, amplitude);
    for (float& c : f.data()) c = float(dist(rng));
    return f;
}

}  // namespace

TEST_CASE("sample_bilinear on a constant field returns the constant") {
    const FlowField f = FlowField::constant(10, 6, {3.0f, -1.0f});
    const Vec2f s = sample_bilinear(f, {7.3f, 2.8f});
    CHECK(s.u == 3.0f);
    CHECK(s.v == -1.0f);
}

TEST_CASE("sample_bilinear at a lattice point returns the stored vector") {
    std::mt19937 rng(7);
    const FlowField f = random_field(8, 8, rng);
    CHECK(sample_bilinear(f, {2.0f, 5.0f}) == f.at(2, 5));
    CHECK(sample_bilinear(f, {0.0f, 0.0f}) == f.at(0, 0));
    CHECK(sample_bilinear(f, {7.0f, 7.0f}) == f.at(7, 7));
}

TEST_CASE("sample_bilinear interpolates hand-evaluated corner weights") {
    // u-channel corners 0,1,0,1 -> center value 0.5
    FlowField f(2, 2);
    f.set(0, 0, {0.0f, 0.0f});
    f.set(1, 0, {1.0f, 0.0f});
    f.set(0, 1, {0.0f, 0.0f});
    f.set(1, 1, {1.0f, 0.0f});
    const Vec2f s = sample_bilinear(f, {0.5f, 0.5f});
    CHECK(s.u == Catch::Approx(0.5).epsilon(1e-6));

    // one quarter along x only
    const Vec2f q = sample_bilinear(f, {0.25f, 0.0f});
    CHECK(q.u == Catch::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("sample_bilinear clamps out-of-bounds coordinates to the edge") {
    std::mt19937 rng(11);
    const FlowField f = random_field(4, 4, rng);
    CHECK(sample_bilinear(f, {-5.0f, 1.0f}) == f.at(0, 1));
    CHECK(sample_bilinear(f, {100.0f, 100.0f}) == f.at(3, 3));
    CHECK(sample_bilinear(f, {1.5f, -2.0f}).u ==
          sample_bilinear(f, {1.5f, 0.0f}).u);
}

TEST_CASE("warp_flow with a zero leader is the identity, bit-exact") {
    std::mt19937 rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        const FlowField f = random_field(17, 9, rng, 1e4f);
        const FlowField zero(17, 9);
        CHECK(warp_flow(f, zero) == f);
    }
}

TEST_CASE("warp_flow shifts a column-index ramp with edge clamping") {
    const int w = 8, h = 4;
    FlowField follower(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) follower.set(x, y, {float(x), 0.0f});
    const FlowField leader = FlowField::constant(w, h, {1.0f, 0.0f});

    const FlowField out = warp_flow(follower, leader);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            CHECK(out.at(x, y).u == float(std::min(x + 1, w - 1)));
}

TEST_CASE("warp_flow of constant fields returns the follower constant") {
    const FlowField leader = FlowField::constant(6, 6, {2.5f, -3.25f});
    const FlowField follower = FlowField::constant(6, 6, {-7.0f, 4.5f});
    const FlowField out = warp_flow(follower, leader);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) CHECK(out.at(x, y) == Vec2f{-7.0f, 4.5f});
}

TEST_CASE("warp_flow rejects mismatched dimensions") {
    const FlowField a(4, 4), b(5, 4);
    CHECK_THROWS_AS(warp_flow(a, b), std::invalid_argument);
    CHECK_THROWS_AS(compose(a, b), std::invalid_argument);
}

TEST_CASE("warp_flow with integer in-bounds leader matches integer lookup exactly") {
    std::mt19937 rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        const int w = 8 + int(rng() % 25);  // up to 32
        const int h = 8 + int(rng() % 25);
        const FlowField follower = random_field(w, h, rng, 50.0f);

        // integer leader with all endpoints kept in bounds
        FlowField leader(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const int dx = int(rng() % std::uint32_t(w)) - x;
                const int dy = int(rng() % std::uint32_t(h)) - y;
                leader.set(x, y, {float(dx), float(dy)});
            }

        const FlowField out = warp_flow(follower, leader);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const int tx = x + int(leader.at(x, y).u);
                const int ty = y + int(leader.at(x, y).v);
                CHECK(out.at(x, y) == follower.at(tx, ty));
            }
    }
}

TEST_CASE("compose adds constant translations exactly") {
    const FlowField a = FlowField::constant(12, 7, {2.0f, 1.0f});
    const FlowField b = FlowField::constant(12, 7, {-5.5f, 3.25f});
    const FlowField out = compose(a, b);
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 12; ++x) CHECK(out.at(x, y) == Vec2f{-3.5f, 4.25f});
}

TEST_CASE("compose with a zero follower equals the leader") {
    std::mt19937 rng(5);
    const FlowField leader = random_field(9, 9, rng);
    const FlowField zero(9, 9);
    CHECK(compose(leader, zero) == leader);
}

TEST_CASE("compose matches brute-force pixel chase on a two-region integer grid") {
    // left half moves (2,1), right half moves (-1,0); follower has its own
    // two-region pattern
    const int w = 16, h = 16;
    FlowField leader(w, h), follower(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            leader.set(x, y, x < w / 2 ? Vec2f{2.0f, 1.0f} : Vec2f{-1.0f, 0.0f});
            follower.set(x, y, y < h / 2 ? Vec2f{1.0f, 3.0f} : Vec2f{0.0f, -2.0f});
        }

    const FlowField out = compose(leader, follower);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const Vec2f d = leader.at(x, y);
            const int tx = std::clamp(x + int(d.u), 0, w - 1);
            const int ty = std::clamp(y + int(d.v), 0, h - 1);
            const Vec2f expect = d + follower.at(tx, ty);
            CHECK(out.at(x, y) == expect);
        }
}

TEST_CASE("compose_masked selects per pixel") {
    const int w = 8, h = 8;
    const FlowField leader = FlowField::constant(w, h, {1.0f, 0.0f});
    const FlowField follower = FlowField::constant(w, h, {0.0f, 2.0f});
    const FlowField fill = FlowField::constant(w, h, {9.0f, 9.0f});

    SECTION("all visible equals compose") {
        const OcclusionMask occ(w, h);
        CHECK(compose_masked(leader, follower, occ, fill) == compose(leader, follower));
    }
    SECTION("all occluded equals the fill") {
        OcclusionMask occ(w, h);
        for (auto& m : occ.data()) m = 1;
        CHECK(compose_masked(leader, follower, occ, fill) == fill);
    }
    SECTION("checkerboard verified exhaustively") {
        OcclusionMask occ(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) occ.set(x, y, (x + y) % 2 == 0);
        const FlowField out = compose_masked(leader, follower, occ, fill);
        const FlowField composed = compose(leader, follower);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                CHECK(out.at(x, y) == (occ.at(x, y) ? fill.at(x, y) : composed.at(x, y)));
    }
}

TEST_CASE("occlusion_proportion counts exactly") {
    OcclusionMask zero(5, 5);
    CHECK(occlusion_proportion(zero) == 0.0);

    OcclusionMask ones(5, 5);
    for (auto& m : ones.data()) m = 1;
    CHECK(occlusion_proportion(ones) == 1.0);

    OcclusionMask mixed(100, 100);
    for (int i = 0; i < 600; ++i) mixed.data()[std::size_t(i)] = 1;
    CHECK(occlusion_proportion(mixed) == 0.06);
}

TEST_CASE("occlusion_proportion is permutation invariant") {
    std::mt19937 rng(13);
    OcclusionMask m(20, 15);
    for (auto& v : m.data()) v = rng() % 3 == 0 ? 1 : 0;
    const double before = occlusion_proportion(m);

    OcclusionMask shuffled = m;
    std::shuffle(shuffled.data().begin(), shuffled.data().end(), rng);
    CHECK(occlusion_proportion(shuffled) == before);
}

TEST_CASE("magnitude_histogram sends the zero field to the first bin") {
    const FlowField f(6, 6);
    const std::vector<double> edges{0.0, 1.0, 2.0};
    const auto counts = magnitude_histogram(f, edges);
    REQUIRE(counts.size() == 2);
    CHECK(counts[0] == 36);
    CHECK(counts[1] == 0);
}

TEST_CASE("magnitude_histogram puts a 3-4-5 field in the bin containing 5") {
    const FlowField f = FlowField::constant(4, 4, {3.0f, 4.0f});
    const std::vector<double> edges{0.0, 2.0, 4.0, 6.0, 8.0};
    const auto counts = magnitude_histogram(f, edges);
    CHECK(counts[2] == 16);  // [4, 6) holds 5
    CHECK(counts[0] + counts[1] + counts[3] == 0);
}

TEST_CASE("magnitude_histogram matches an independent scalar re-binning") {
    std::mt19937 rng(99);
    const FlowField f = random_field(23, 17, rng, 20.0f);
    const std::vector<double> edges{0.0, 1.0, 2.5, 5.0, 10.0, 40.0};
    const auto counts = magnitude_histogram(f, edges);

    // second, independent binning pass: linear scan over the edges
    std::vector<std::int64_t> expect(edges.size() - 1, 0);
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x) {
            const double m = std::hypot(double(f.at(x, y).u), double(f.at(x, y).v));
            std::size_t bin = 0;
            for (std::size_t i = 1; i + 1 < edges.size(); ++i)
                if (m >= edges[i]) bin = i;
            ++expect[bin];
        }
    CHECK(counts == expect);

    std::int64_t total = 0;
    for (auto c : counts) total += c;
    CHECK(total == f.pixel_count());
}

TEST_CASE("magnitude_histogram total always equals the pixel count") {
    std::mt19937 rng(123);
    const FlowField f = random_field(31, 11, rng, 500.0f);  // magnitudes beyond the last edge
    const std::vector<double> edges{1.0, 2.0, 3.0};
    const auto counts = magnitude_histogram(f, edges);
    std::int64_t total = 0;
    for (auto c : counts) total += c;
    CHECK(total == f.pixel_count());
}

TEST_CASE("magnitude_histogram rejects non-monotonic edges") {
    const FlowField f(2, 2);
    const std::vector<double> bad{0.0, 2.0, 1.0};
    CHECK_THROWS_AS(magnitude_histogram(f, bad), std::invalid_argument);
    const std::vector<double> single{1.0};
    CHECK_THROWS_AS(magnitude_histogram(f, single), std::invalid_argument);
}
