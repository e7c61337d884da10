#include <catch2/catch_amalgamated.hpp>

#include "vpt/keyboard_region.hpp"
#include "vpt/preprocess.hpp"

#include "helpers.hpp"

using namespace vpt;

namespace {

DetectionSet detections_from(const std::string& text, const test::TempDir& dir, int first_k = 30) {
    auto p = dir / "det.txt";
    test::write_text(p, text);
    return load_detections(p, first_k);
}

ImageU8 checker(int h, int w) {
    ImageU8 img(h, w, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(y, x, c) = static_cast<std::uint8_t>((x * 31 + y * 17 + c) % 256);
    return img;
}

}  // namespace

TEST_CASE("single candidate is selected as-is") {
    test::TempDir dir;
    auto set = detections_from("0 10 20 110 70 0.9\n", dir);
    BoundingBox box = select_box(set);
    REQUIRE(box.x0 == 10);
    REQUIRE(box.y1 == 70);
    REQUIRE(box.confidence == Catch::Approx(0.9));
}

TEST_CASE("highest confidence wins across frames") {
    test::TempDir dir;
    auto set = detections_from(
        "0 0 0 10 10 0.3\n"
        "1 5 5 20 20 0.9\n"
        "2 1 1 8 8 0.7\n",
        dir);
    BoundingBox box = select_box(set);
    REQUIRE(box.x0 == 5);
    REQUIRE(box.confidence == Catch::Approx(0.9));
    // max property: selected confidence dominates every candidate
    for (const auto& frame : set.per_frame)
        for (const auto& cand : frame) REQUIRE(box.confidence >= cand.confidence);
}

TEST_CASE("confidence ties break to the earliest frame, then smallest x0") {
    test::TempDir dir;
    SECTION("frames 2 and 0 at 0.8 -> frame 0") {
        auto set = detections_from(
            "2 50 0 90 40 0.8\n"
            "0 30 0 70 40 0.8\n",
            dir);
        REQUIRE(select_box(set).x0 == 30);
    }
    SECTION("same frame -> smaller x0") {
        auto set = detections_from(
            "1 40 0 80 40 0.8\n"
            "1 20 0 60 40 0.8\n",
            dir);
        REQUIRE(select_box(set).x0 == 20);
    }
}

TEST_CASE("no usable detection is an error") {
    test::TempDir dir;
    SECTION("empty file") {
        auto set = detections_from("# no rows\n", dir);
        REQUIRE_THROWS_WITH(select_box(set), Catch::Matchers::ContainsSubstring("no keyboard"));
    }
    SECTION("detections only beyond the first K frames") {
        auto set = detections_from("31 0 0 10 10 0.9\n", dir, 30);
        REQUIRE_THROWS_WITH(select_box(set), Catch::Matchers::ContainsSubstring("no keyboard"));
    }
}

TEST_CASE("detection file parsing") {
    test::TempDir dir;
    SECTION("decimal coordinates are rounded to pixels") {
        auto set = detections_from("0 9.6 19.4 110.5 69.5 0.8\n", dir);
        BoundingBox box = select_box(set);
        REQUIRE(box.x0 == 10);
        REQUIRE(box.y0 == 19);
        REQUIRE(box.x1 == 111);
        REQUIRE(box.y1 == 70);
    }
    SECTION("malformed row") {
        auto p = dir / "bad.txt";
        test::write_text(p, "0 10 20 110 0.9\n");
        REQUIRE_THROWS_AS(load_detections(p), Error);
    }
    SECTION("confidence outside [0,1]") {
        auto p = dir / "bad2.txt";
        test::write_text(p, "0 10 20 110 70 1.5\n");
        REQUIRE_THROWS_AS(load_detections(p), Error);
    }
    SECTION("degenerate box") {
        auto p = dir / "bad3.txt";
        test::write_text(p, "0 10 20 10 70 0.9\n");
        REQUIRE_THROWS_AS(load_detections(p), Error);
    }
}

TEST_CASE("crop copies the boxed pixels unmodified") {
    ImageU8 frame = checker(224, 224);
    SECTION("full-frame box is the identity") {
        ImageU8 out = crop_frame(frame, {0, 0, 224, 224, 1.0});
        REQUIRE(out.v == frame.v);
    }
    SECTION("(10,20)-(110,70) gives a 50x100 crop") {
        ImageU8 out = crop_frame(frame, {10, 20, 110, 70, 1.0});
        REQUIRE(out.h == 50);
        REQUIRE(out.w == 100);
        for (int y = 0; y < 50; ++y)
            for (int x = 0; x < 100; ++x)
                for (int c = 0; c < 3; ++c)
                    REQUIRE(out.at(y, x, c) == frame.at(y + 20, x + 10, c));
    }
}

TEST_CASE("out-of-bounds boxes clamp at >=90% overlap, error below") {
    ImageU8 frame = checker(480, 640);
    SECTION("4 px past the right edge of a 100-wide box clamps (96%)") {
        bool clamped = false;
        ImageU8 out = crop_frame(frame, {544, 100, 644, 200, 1.0}, &clamped);
        REQUIRE(clamped);
        REQUIRE(out.w == 96);
        REQUIRE(out.h == 100);
    }
    SECTION("a box mostly outside errors out") {
        REQUIRE_THROWS_AS(crop_frame(frame, {600, 100, 700, 200, 1.0}), Error);  // 40% inside
    }
    SECTION("boundary case just under 90% errors") {
        // width 100: 89 columns inside -> 89% < 90%
        REQUIRE_THROWS_AS(crop_frame(frame, {551, 100, 651, 200, 1.0}), Error);
        bool clamped = false;  // 90 columns inside -> exactly 90%
        ImageU8 out = crop_frame(frame, {550, 100, 650, 200, 1.0}, &clamped);
        REQUIRE(clamped);
        REQUIRE(out.w == 90);
    }
}

TEST_CASE("crop commutes with grayscale conversion") {
    ImageU8 frame = checker(60, 80);
    BoundingBox box{5, 7, 41, 33, 1.0};
    ImageF gray_then_crop = crop_image(to_grayscale(to_float(frame)), box.x0, box.y0, box.x1, box.y1);
    ImageF crop_then_gray = to_grayscale(to_float(crop_frame(frame, box)));
    REQUIRE(gray_then_crop.v == crop_then_gray.v);
}
