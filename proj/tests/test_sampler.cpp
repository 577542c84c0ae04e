#include <catch_amalgamated.hpp>

#include <array>

#include "swg/sampler.hpp"

using namespace swg;
using Catch::Matchers::WithinAbs;

namespace {

constexpr std::array<DrumClass, 5> kFive{DrumClass::kick, DrumClass::snare, DrumClass::tom, DrumClass::closed_hh,
                                         DrumClass::open_hh};

DatasetManifest manifest_with(std::span<const std::size_t> sizes) {
    DatasetManifest m;
    for (std::size_t c = 0; c < sizes.size(); ++c)
        for (std::size_t i = 0; i < sizes[c]; ++i)
            m.add({to_string(kFive[c]) + "_" + std::to_string(i) + ".wav", kFive[c]});
    return m;
}

std::vector<double> class_freq(const DatasetManifest& m, SamplingMode mode, std::uint64_t seed, std::size_t draws) {
    Sampler s(m, mode, seed);
    std::vector<double> f(m.classes().size(), 0.0);
    for (std::size_t i = 0; i < draws; ++i) f[m.class_slot(m.entries()[s.next()].drum_class)] += 1.0 / draws;
    return f;
}

}  // namespace

TEST_CASE("sampling mode names") {
    CHECK(parse_sampling_mode("natural") == SamplingMode::natural);
    CHECK(parse_sampling_mode(to_string(SamplingMode::balanced)) == SamplingMode::balanced);
    CHECK_THROWS(parse_sampling_mode("stratified"));
}

TEST_CASE("manifest indexes classes in first-seen order") {
    DatasetManifest m;
    m.add({"a.wav", DrumClass::snare});
    m.add({"b.wav", DrumClass::kick});
    m.add({"c.wav", DrumClass::snare});
    CHECK(m.classes() == std::vector<DrumClass>{DrumClass::snare, DrumClass::kick});
    const auto idx = m.indices_of(DrumClass::snare);
    CHECK(std::vector<std::size_t>(idx.begin(), idx.end()) == std::vector<std::size_t>{0, 2});
    CHECK(m.indices_of(DrumClass::tom).empty());
    CHECK_THROWS(m.class_slot(DrumClass::tom));
}

TEST_CASE("empty manifest cannot be sampled") {
    const DatasetManifest m;
    std::mt19937_64 rng(1);
    CHECK_THROWS(sample(m, SamplingMode::natural, rng));
    CHECK_THROWS(Sampler(m, SamplingMode::balanced, 1));
}

TEST_CASE("single class gives the same draws in both modes") {
    const std::size_t sizes[] = {37};
    const auto m = manifest_with(sizes);
    std::vector<double> hn(37, 0.0), hb(37, 0.0);
    Sampler n(m, SamplingMode::natural, 5), b(m, SamplingMode::balanced, 5);
    for (int i = 0; i < 37000; ++i) {
        hn[n.next()] += 1;
        hb[b.next()] += 1;
    }
    for (std::size_t i = 0; i < 37; ++i) {
        CHECK(std::abs(hn[i] / 37000 - 1.0 / 37) < 0.006);
        CHECK(std::abs(hb[i] / 37000 - 1.0 / 37) < 0.006);
    }
}

TEST_CASE("balanced sampling equalizes a 90/10 split") {
    const std::size_t sizes[] = {90, 10};
    const auto f = class_freq(manifest_with(sizes), SamplingMode::balanced, 7, 100000);
    for (double v : f) {
        CHECK(v >= 0.49);
        CHECK(v <= 0.51);
    }
}

TEST_CASE("natural sampling keeps manifest proportions") {
    const std::size_t sizes[] = {30, 180, 450, 100, 220};
    const auto f = class_freq(manifest_with(sizes), SamplingMode::natural, 8, 100000);
    // the published percentages sum to 98, so compare against the manifest shares
    for (std::size_t c = 0; c < 5; ++c) CHECK(std::abs(f[c] - sizes[c] / 980.0) <= 0.01);
}

TEST_CASE("balanced draws pass the uniformity test for fixed seeds") {
    const std::size_t sizes[] = {30, 180, 450, 100, 220};
    const auto m = manifest_with(sizes);
    for (std::uint64_t seed : {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}) {
        Sampler s(m, SamplingMode::balanced, seed);
        std::vector<std::size_t> slots;
        for (int i = 0; i < 10000; ++i) slots.push_back(m.class_slot(m.entries()[s.next()].drum_class));
        const auto h = class_histogram(slots, 5);
        CHECK(h.total == 10000);
        CHECK(h.chi_square < 18.47);
    }
}

TEST_CASE("class histogram arithmetic") {
    const std::vector<std::size_t> uniform{0, 1, 2, 0, 1, 2};
    const auto u = class_histogram(uniform, 3);
    CHECK(u.counts == std::vector<std::size_t>{2, 2, 2});
    CHECK(u.chi_square == 0.0);

    std::vector<std::size_t> skew(100, 0);
    const auto s = class_histogram(skew, 2);
    CHECK(s.counts == std::vector<std::size_t>{100, 0});
    CHECK_THAT(s.chi_square, WithinAbs(100.0, 1e-12));
    CHECK_THROWS(class_histogram(std::vector<std::size_t>{3}, 2));
}

TEST_CASE("sampler is reproducible for a seed") {
    const std::size_t sizes[] = {3, 50, 7};
    const auto m = manifest_with(sizes);
    for (auto mode : {SamplingMode::natural, SamplingMode::balanced}) {
        Sampler a(m, mode, 99), b(m, mode, 99), c(m, mode, 100);
        std::vector<std::size_t> da, db, dc;
        for (int i = 0; i < 1000; ++i) {
            da.push_back(a.next());
            db.push_back(b.next());
            dc.push_back(c.next());
        }
        CHECK(da == db);
        CHECK(da != dc);
    }
}
