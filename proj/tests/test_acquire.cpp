#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "autoscope/acquire.hpp"
#include "autoscope/rng.hpp"

using namespace autoscope;
using namespace autoscope::acquire;

namespace {

gp::Posterior make_posterior(int w, int h, Rng& rng, bool zero_sigma_some = false) {
    gp::Posterior post;
    post.mean = ScalarField2D(w, h, {static_cast<double>(w), static_cast<double>(h)});
    post.std = ScalarField2D(w, h, {static_cast<double>(w), static_cast<double>(h)});
    for (std::size_t i = 0; i < post.mean.size(); ++i) {
        post.mean.values[i] = rng.next_gaussian();
        post.std.values[i] = rng.next_double();
        if (zero_sigma_some && rng.next_double() < 0.2) post.std.values[i] = 0.0;
    }
    return post;
}

Pixel argmax_of(const ScalarField2D& f) {
    Pixel best{0, 0};
    double bv = -std::numeric_limits<double>::infinity();
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            if (f.at(x, y) > bv) {
                bv = f.at(x, y);
                best = {x, y};
            }
    return best;
}

// brute-force NMS oracle
std::vector<Candidate> nms_oracle(const ScalarField2D& acq, int k, double min_sep) {
    std::vector<Candidate> out;
    std::vector<char> dead(acq.size(), 0);
    while (static_cast<int>(out.size()) < k) {
        double bv = -std::numeric_limits<double>::infinity();
        int bx = -1, by = -1;
        for (int y = 0; y < acq.height; ++y)
            for (int x = 0; x < acq.width; ++x)
                if (!dead[y * acq.width + x] && acq.at(x, y) > bv) {
                    bv = acq.at(x, y);
                    bx = x;
                    by = y;
                }
        if (bx < 0 || bv == -std::numeric_limits<double>::infinity()) break;
        out.push_back({{bx, by}, bv});
        for (int y = 0; y < acq.height; ++y)
            for (int x = 0; x < acq.width; ++x) {
                const double dx = x - bx, dy = y - by;
                if (dx * dx + dy * dy < min_sep * min_sep) dead[y * acq.width + x] = 1;
            }
        dead[by * acq.width + bx] = 1;
    }
    return out;
}

}  // namespace

TEST_CASE("edge_mask: taper 0, border ring, cosine midpoint") {
    const auto ones = edge_mask(8, 8, 0.0);
    for (double v : ones.values) CHECK(v == 1.0);

    const auto mask = edge_mask(16, 12, 4.0);
    for (int x = 0; x < 16; ++x) {
        CHECK(mask.at(x, 0) == 0.0);
        CHECK(mask.at(x, 11) == 0.0);
    }
    for (int y = 0; y < 12; ++y) {
        CHECK(mask.at(0, y) == 0.0);
        CHECK(mask.at(15, y) == 0.0);
    }
    // distance taper/2 = 2 from the border -> exactly 1/2
    CHECK(std::abs(mask.at(2, 6) - 0.5) < 1e-12);
    CHECK(std::abs(mask.at(6, 2) - 0.5) < 1e-12);
    // interior is exactly 1
    CHECK(mask.at(8, 6) == 1.0);

    CHECK_THROWS_AS(edge_mask(8, 8, 5.0), std::invalid_argument);
}

TEST_CASE("evaluate: ucb with beta 0 equals the masked mean") {
    Rng rng(1);
    const auto post = make_posterior(12, 10, rng);
    const auto mask = edge_mask(12, 10, 2.0);
    AcquisitionSpec spec;
    spec.kind = AcquisitionKind::ucb;
    spec.beta = 0.0;
    const auto acq = evaluate(spec, post, mask, {});
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 12; ++x)
            CHECK(acq.at(x, y) == post.mean.at(x, y) * mask.at(x, y));
}

TEST_CASE("evaluate: ei is 0 at sigma = 0 and matches the normal-cdf oracle") {
    gp::Posterior post;
    post.mean = ScalarField2D(1, 1, {1, 1}, 1.0);
    post.std = ScalarField2D(1, 1, {1, 1}, 1.0);
    const auto mask = edge_mask(1, 1, 0.0);
    AcquisitionSpec spec;
    spec.kind = AcquisitionKind::ei;
    spec.best_so_far = 0.0;
    spec.xi = 0.0;
    const auto acq = evaluate(spec, post, mask, {});
    // 1*Phi(1) + 1*phi(1), frozen from direct evaluation of the normal pdf/cdf
    CHECK(std::abs(acq.at(0, 0) - 1.0833154705876864) < 1e-12);

    post.std.at(0, 0) = 0.0;
    const auto zero = evaluate(spec, post, mask, {});
    CHECK(zero.at(0, 0) == 0.0);
}

TEST_CASE("evaluate: pi is the normal cdf of the improvement z-score") {
    gp::Posterior post;
    post.mean = ScalarField2D(1, 1, {1, 1}, 0.7);
    post.std = ScalarField2D(1, 1, {1, 1}, 0.5);
    const auto mask = edge_mask(1, 1, 0.0);
    AcquisitionSpec spec;
    spec.kind = AcquisitionKind::pi;
    spec.best_so_far = 0.2;
    spec.xi = 0.0;
    const auto acq = evaluate(spec, post, mask, {});
    const double z = (0.7 - 0.2) / 0.5;
    CHECK(acq.at(0, 0) == doctest::Approx(0.5 * std::erfc(-z / std::sqrt(2.0))).epsilon(1e-12));
}

TEST_CASE("evaluate: visited pixels are forced to -inf; dims must agree") {
    Rng rng(2);
    const auto post = make_posterior(8, 8, rng);
    const auto mask = edge_mask(8, 8, 0.0);
    PixelSet visited(8, 8);
    visited.insert({3, 4});
    AcquisitionSpec spec;
    spec.kind = AcquisitionKind::max_variance;
    const auto acq = evaluate(spec, post, mask, visited);
    CHECK(acq.at(3, 4) == -std::numeric_limits<double>::infinity());
    CHECK(acq.at(0, 0) == post.std.at(0, 0));

    const auto bad_mask = edge_mask(9, 8, 0.0);
    CHECK_THROWS_AS(evaluate(spec, post, bad_mask, visited), std::invalid_argument);
}

TEST_CASE("evaluate: unmasked formulas are recovered with an all-ones mask") {
    Rng rng(3);
    const auto post = make_posterior(10, 10, rng, true);
    const auto ones = edge_mask(10, 10, 0.0);
    for (auto kind : {AcquisitionKind::max_variance, AcquisitionKind::ucb, AcquisitionKind::ei,
                      AcquisitionKind::pi}) {
        AcquisitionSpec spec;
        spec.kind = kind;
        spec.beta = 1.7;
        spec.best_so_far = 0.1;
        const auto acq = evaluate(spec, post, ones, {});
        for (int y = 0; y < 10; ++y)
            for (int x = 0; x < 10; ++x) {
                const double m = post.mean.at(x, y), s = post.std.at(x, y);
                double expect = 0.0;
                switch (kind) {
                    case AcquisitionKind::max_variance: expect = s; break;
                    case AcquisitionKind::ucb: expect = m + 1.7 * s; break;
                    case AcquisitionKind::ei: {
                        const double imp = m - 0.1;
                        if (s == 0.0) {
                            expect = 0.0;
                        } else {
                            const double z = imp / s;
                            expect = imp * 0.5 * std::erfc(-z / std::sqrt(2.0)) +
                                     s * std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI);
                        }
                        break;
                    }
                    case AcquisitionKind::pi: {
                        const double imp = m - 0.1;
                        expect = s == 0.0 ? (imp > 0.0 ? 1.0 : 0.0)
                                          : 0.5 * std::erfc(-(imp / s) / std::sqrt(2.0));
                        break;
                    }
                }
                CHECK(std::abs(acq.at(x, y) - expect) <= 1e-12);
            }
    }
}

TEST_CASE("ei is nonnegative everywhere (random posteriors)") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto post = make_posterior(9, 9, rng, true);
        const auto ones = edge_mask(9, 9, 0.0);
        AcquisitionSpec spec;
        spec.kind = AcquisitionKind::ei;
        spec.best_so_far = rng.next_gaussian();
        spec.xi = rng.next_double() * 0.2;
        const auto acq = evaluate(spec, post, ones, {});
        for (double v : acq.values) CHECK(v >= -1e-12);
    }
}

TEST_CASE("top_maxima: tie-break picks (row 0, col 0) on a constant field") {
    const ScalarField2D flat(6, 6, {6, 6}, 1.0);
    const auto top = top_maxima(flat, 1, 0.0);
    REQUIRE(top.size() == 1);
    CHECK(top[0].px == Pixel{0, 0});
}

TEST_CASE("top_maxima: two spikes beyond min_sep both returned, in score order") {
    ScalarField2D f(20, 5, {20, 5}, 0.0);
    f.at(2, 2) = 5.0;
    f.at(12, 2) = 7.0;
    const auto top = top_maxima(f, 2, 3.0);
    REQUIRE(top.size() == 2);
    CHECK(top[0].px == Pixel{12, 2});
    CHECK(top[1].px == Pixel{2, 2});
    CHECK(top[0].score == 7.0);
}

TEST_CASE("top_maxima matches the brute-force oracle and honors min_sep") {
    Rng rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        ScalarField2D f(16, 16, {16, 16});
        for (auto& v : f.values) v = rng.next_double();
        const auto got = top_maxima(f, 5, 4.0);
        const auto want = nms_oracle(f, 5, 4.0);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].px == want[i].px);
            CHECK(got[i].score == want[i].score);
        }
        for (std::size_t i = 0; i < got.size(); ++i)
            for (std::size_t j = i + 1; j < got.size(); ++j)
                CHECK(got[i].px.dist(got[j].px) >= 4.0);
    }
}

TEST_CASE("top_maxima selection is invariant under positive scaling") {
    Rng rng(8);
    ScalarField2D f(12, 12, {12, 12});
    for (auto& v : f.values) v = rng.next_gaussian();
    const auto base = top_maxima(f, 4, 2.0);
    for (double c : {0.5, 3.0, 1e6}) {
        ScalarField2D g = f;
        for (auto& v : g.values) v *= c;
        const auto scaled = top_maxima(g, 4, 2.0);
        REQUIRE(scaled.size() == base.size());
        for (std::size_t i = 0; i < base.size(); ++i) CHECK(scaled[i].px == base[i].px);
    }
}

TEST_CASE("pathfind: single candidate, collinear nearest order") {
    const std::vector<Candidate> one{{{5, 5}, 1.0}};
    PathfinderPolicy pol;
    const auto order = pathfind(one, {0, 0}, pol);
    REQUIRE(order.size() == 1);
    CHECK(order[0].px == Pixel{5, 5});

    const std::vector<Candidate> line{{{2, 0}, 1.0}, {{1, 0}, 1.0}, {{3, 0}, 1.0}};
    const auto tour = pathfind(line, {0, 0}, pol);
    CHECK(tour[0].px == Pixel{1, 0});
    CHECK(tour[1].px == Pixel{2, 0});
    CHECK(tour[2].px == Pixel{3, 0});

    CHECK_THROWS_AS(pathfind({}, {0, 0}, pol), std::invalid_argument);
}

TEST_CASE("pathfind: non_crossing tours have no properly intersecting segments") {
    Rng rng(9);
    PathfinderPolicy pol;
    pol.mode = PathfinderMode::non_crossing;
    for (int trial = 0; trial < 50; ++trial) {
        std::set<std::pair<int, int>> seen;
        std::vector<Candidate> cands;
        while (cands.size() < 5) {
            const Pixel p{rng.next_int(40), rng.next_int(40)};
            if (seen.insert({p.x, p.y}).second) cands.push_back({p, rng.next_double()});
        }
        const Pixel start{rng.next_int(40), rng.next_int(40)};
        const auto tour = pathfind(cands, start, pol);
        REQUIRE(tour.size() == cands.size());

        std::vector<Pixel> nodes{start};
        for (const auto& c : tour) nodes.push_back(c.px);
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
            for (std::size_t j = i + 2; j + 1 < nodes.size(); ++j)
                CHECK_FALSE(segments_properly_intersect(nodes[i], nodes[i + 1], nodes[j],
                                                        nodes[j + 1]));
    }
}

TEST_CASE("pathfind: output is always a permutation of the candidates") {
    Rng rng(10);
    for (auto mode :
         {PathfinderMode::nearest, PathfinderMode::non_crossing, PathfinderMode::directional}) {
        PathfinderPolicy pol;
        pol.mode = mode;
        pol.dir_penalty = 2.0;
        for (int trial = 0; trial < 20; ++trial) {
            std::set<std::pair<int, int>> seen;
            std::vector<Candidate> cands;
            while (cands.size() < 7) {
                const Pixel p{rng.next_int(30), rng.next_int(30)};
                if (seen.insert({p.x, p.y}).second) cands.push_back({p, rng.next_double()});
            }
            const auto tour = pathfind(cands, {15, 15}, pol);
            REQUIRE(tour.size() == cands.size());
            auto key = [](const Candidate& c) { return std::pair{c.px.x, c.px.y}; };
            std::set<std::pair<int, int>> in, out;
            for (const auto& c : cands) in.insert(key(c));
            for (const auto& c : tour) out.insert(key(c));
            CHECK(in == out);
        }
    }
}

TEST_CASE("pathfind: 2-opt never lengthens the tour") {
    Rng rng(11);
    PathfinderPolicy nearest_pol, uncross_pol;
    uncross_pol.mode = PathfinderMode::non_crossing;
    for (int trial = 0; trial < 50; ++trial) {
        std::set<std::pair<int, int>> seen;
        std::vector<Candidate> cands;
        while (cands.size() < 8) {
            const Pixel p{rng.next_int(32), rng.next_int(32)};
            if (seen.insert({p.x, p.y}).second) cands.push_back({p, rng.next_double()});
        }
        const Pixel start{rng.next_int(32), rng.next_int(32)};
        const auto greedy = pathfind(cands, start, nearest_pol);
        const auto uncrossed = pathfind(cands, start, uncross_pol);
        CHECK(tour_length(uncrossed, start) <= tour_length(greedy, start) + 1e-9);
    }
}

TEST_CASE("pathfind: directional mode prefers motion along the preferred direction") {
    PathfinderPolicy pol;
    pol.mode = PathfinderMode::directional;
    pol.preferred_dir = {1.0, 0.0};
    pol.dir_penalty = 10.0;
    // two equidistant candidates: one east, one north; east must come first
    const std::vector<Candidate> cands{{{0, 5}, 1.0}, {{5, 0}, 1.0}};
    const auto tour = pathfind(cands, {0, 0}, pol);
    CHECK(tour[0].px == Pixel{5, 0});
    CHECK(tour[1].px == Pixel{0, 5});
}
