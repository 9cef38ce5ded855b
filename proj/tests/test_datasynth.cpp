#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ifr/core/png.hpp"
#include "ifr/core/rng.hpp"
#include "ifr/data/charset.hpp"
#include "ifr/data/dataset.hpp"
#include "ifr/data/degrade.hpp"
#include "ifr/data/font5x7.hpp"
#include "ifr/data/render.hpp"
#include "test_util.hpp"

using namespace ifr;
using testutil::read_file;
using testutil::TempDir;

namespace {

bool images_equal(const Image& a, const Image& b) {
  return a.h == b.h && a.w == b.w && a.data == b.data;
}

double max_abs_diff(const Image& a, const Image& b) {
  REQUIRE(a.h == b.h);
  REQUIRE(a.w == b.w);
  double m = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

void write_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  REQUIRE(bool(f));
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  REQUIRE(bool(f));
}

void put_u32be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void append_chunk(std::vector<uint8_t>& out, const char* type, const std::vector<uint8_t>& data) {
  put_u32be(out, static_cast<uint32_t>(data.size()));
  size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  uint32_t crc = crc32(0, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32be(out, crc);
}

std::vector<uint8_t> deflate_bytes(const std::vector<uint8_t>& raw) {
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> z(bound);
  REQUIRE(compress2(z.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) == Z_OK);
  z.resize(bound);
  return z;
}

// raw = filter byte + filtered samples, per scanline, already concatenated.
std::vector<uint8_t> make_png(uint32_t w, uint32_t h, int depth, int color,
                              const std::vector<uint8_t>& raw, int interlace = 0) {
  std::vector<uint8_t> ihdr;
  put_u32be(ihdr, w);
  put_u32be(ihdr, h);
  ihdr.push_back(static_cast<uint8_t>(depth));
  ihdr.push_back(static_cast<uint8_t>(color));
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(static_cast<uint8_t>(interlace));
  const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  std::vector<uint8_t> file(sig, sig + 8);
  append_chunk(file, "IHDR", ihdr);
  append_chunk(file, "IDAT", deflate_bytes(raw));
  append_chunk(file, "IEND", {});
  return file;
}

uint8_t ref_paeth(uint8_t a, uint8_t b, uint8_t c) {
  int p = int(a) + int(b) - int(c);
  int pa = std::abs(p - int(a)), pb = std::abs(p - int(b)), pc = std::abs(p - int(c));
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

TEST_CASE("rng streams are deterministic and well ranged") {
  CHECK(derive_seed(42, 0) == derive_seed(42, 0));
  CHECK(derive_seed(42, 0) != derive_seed(42, 1));
  CHECK(derive_seed(42, 0) != derive_seed(43, 0));

  Rng a(7), b(7);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng r(99);
  for (int i = 0; i < 2000; ++i) {
    double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 2000; ++i) {
    double u = r.uniform(2.5, 3.5);
    CHECK(u >= 2.5);
    CHECK(u < 3.5);
  }
  bool seen[5] = {};
  for (int i = 0; i < 500; ++i) {
    int v = r.uniform_int(5);
    REQUIRE(v >= 0);
    REQUIRE(v < 5);
    seen[v] = true;
  }
  for (bool s : seen) CHECK(s);
}

TEST_CASE("charset encodes case-insensitively with trailing eos class") {
  Charset cs;
  CHECK(cs.size() == 36);
  CHECK(cs.eos() == 36);
  CHECK(cs.num_classes() == 37);

  std::vector<int> ids = cs.encode("a0Z");
  CHECK(ids == std::vector<int>{10, 0, 35});
  CHECK(cs.encode("ABC") == cs.encode("abc"));
  CHECK(cs.decode(ids) == "a0z");
  CHECK(cs.decode({10, 11, 36, 12}) == "ab");
  CHECK_THROWS_AS(cs.encode("a!"), std::invalid_argument);
  CHECK_THROWS_AS(cs.decode({40}), std::invalid_argument);
  CHECK_THROWS_AS(Charset(""), std::invalid_argument);
  CHECK_THROWS_AS(Charset("aba"), std::invalid_argument);

  Charset digits("017");
  CHECK(digits.size() == 3);
  CHECK(digits.index_of('7') == 2);
  CHECK(digits.index_of('x') == -1);
  CHECK(digits.contains('0'));

  CHECK(canonical_text("A-b c1!") == "abc1");
  CHECK(canonical_text("...") == "");
}

TEST_CASE("font covers the charset inventory") {
  Charset cs;
  for (char c : cs.symbols()) {
    CAPTURE(c);
    REQUIRE(glyph5x7(c) != nullptr);
    CHECK(glyph_weight(c) > 0);
    int count = 0;
    for (int r = 0; r < 7; ++r)
      for (int q = 0; q < 5; ++q) count += glyph_pixel(c, r, q) ? 1 : 0;
    CHECK(count == glyph_weight(c));
    CHECK(glyph5x7(static_cast<char>(std::toupper(static_cast<unsigned char>(c)))) == glyph5x7(c));
  }
  CHECK(glyph5x7('!') == nullptr);
  CHECK(glyph_weight('!') == 0);
}

TEST_CASE("gaussian kernel matches the sampled normalized form") {
  Kernel2D k1 = gaussian_kernel(1, 2.0);
  REQUIRE(k1.size == 1);
  CHECK(k1.weights[0] == 1.0);

  // Flat limit: huge sigma makes all nine weights 1/9.
  Kernel2D flat = gaussian_kernel(3, 1e6);
  for (double w : flat.weights) CHECK(std::abs(w - 1.0 / 9.0) < 1e-6);

  // Closed form at size 3: weights exp(-d^2 / (2 s^2)) over d^2 in {0,1,2}.
  double s = 0.8;
  double e = std::exp(-1.0 / (2 * s * s)), c = std::exp(-2.0 / (2 * s * s));
  double sum = 1 + 4 * e + 4 * c;
  Kernel2D k3 = gaussian_kernel(3, s);
  CHECK(std::abs(k3.at(1, 1) - 1 / sum) < 1e-12);
  CHECK(std::abs(k3.at(0, 1) - e / sum) < 1e-12);
  CHECK(std::abs(k3.at(0, 0) - c / sum) < 1e-12);

  for (int size : {3, 5, 9}) {
    for (double sigma : {0.5, 1.3}) {
      Kernel2D k = gaussian_kernel(size, sigma);
      double total = 0.0;
      for (double w : k.weights) total += w;
      CHECK(std::abs(total - 1.0) < 1e-9);
      for (int r = 0; r < size; ++r)
        for (int q = 0; q < size; ++q) {
          CHECK(k.at(r, q) == k.at(size - 1 - r, q));
          CHECK(k.at(r, q) == k.at(r, size - 1 - q));
          CHECK(k.at(r, q) == k.at(q, r));
        }
    }
  }

  CHECK_THROWS_AS(gaussian_kernel(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_kernel(2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_kernel(3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_kernel(3, -1.0), std::invalid_argument);
}

TEST_CASE("blur preserves constants and reproduces the kernel on an impulse") {
  Image flat(5, 9, 0.7);
  Image bf = blur(flat, gaussian_kernel(5, 1.1));
  for (double v : bf.data) CHECK(std::abs(v - 0.7) < 1e-12);

  Image rnd(6, 11);
  Rng r(3);
  for (double& v : rnd.data) v = r.uniform();
  CHECK(images_equal(blur(rnd, gaussian_kernel(1, 0.7)), rnd));

  Image imp(9, 9, 0.0);
  imp.at(4, 4) = 1.0;
  Kernel2D k = gaussian_kernel(3, 0.9);
  Image resp = blur(imp, k);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 9; ++x) {
      double want = (std::abs(y - 4) <= 1 && std::abs(x - 4) <= 1) ? k.at(y - 3, x - 3) : 0.0;
      CHECK(std::abs(resp.at(y, x) - want) < 1e-12);
    }

  // Linearity holds while values stay inside the clamp range.
  Image a(7, 13), b(7, 13), ab(7, 13);
  Rng r2(8);
  for (size_t i = 0; i < a.data.size(); ++i) {
    a.data[i] = r2.uniform(0.0, 0.3);
    b.data[i] = r2.uniform(0.0, 0.3);
    ab.data[i] = a.data[i] + b.data[i];
  }
  Kernel2D k5 = gaussian_kernel(5, 1.4);
  Image ba = blur(a, k5), bb = blur(b, k5), bab = blur(ab, k5);
  for (size_t i = 0; i < ba.data.size(); ++i) CHECK(std::abs(bab.data[i] - ba.data[i] - bb.data[i]) < 1e-9);
}

TEST_CASE("bilinear resize uses half-pixel centers") {
  Image row(1, 2);
  row.at(0, 0) = 0.0;
  row.at(0, 1) = 1.0;
  Image up = bilinear_resize(row, 1, 4);
  double want[4] = {0.0, 0.25, 0.75, 1.0};
  for (int x = 0; x < 4; ++x) CHECK(std::abs(up.at(0, x) - want[x]) < 1e-12);

  Image col(2, 1);
  col.at(0, 0) = 0.2;
  col.at(1, 0) = 0.6;
  Image upc = bilinear_resize(col, 4, 1);
  double wantc[4] = {0.2, 0.3, 0.5, 0.6};
  for (int y = 0; y < 4; ++y) CHECK(std::abs(upc.at(y, 0) - wantc[y]) < 1e-12);

  Image same(3, 5, 0.4);
  CHECK(images_equal(bilinear_resize(same, 3, 5), same));

  Image flat(4, 6, 0.31);
  Image rs = bilinear_resize(flat, 9, 5);
  for (double v : rs.data) CHECK(std::abs(v - 0.31) < 1e-12);

  CHECK_THROWS_AS(bilinear_resize(flat, 0, 5), std::invalid_argument);
}

TEST_CASE("downup composes the two resizes and keeps ratio one lossless") {
  Image img(4, 8);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 8; ++x) img.at(y, x) = (y * 8 + x) / 31.0;

  CHECK(images_equal(downup(img, 1.0), img));

  Image got = downup(img, 2.0);
  Image want = bilinear_resize(bilinear_resize(img, 2, 4), 4, 8);
  CHECK(max_abs_diff(got, want) == 0.0);

  // Extreme ratio bottoms out at a 1x1 intermediate: constant output.
  Image ext = downup(img, 1000.0);
  for (double v : ext.data) CHECK(std::abs(v - ext.data[0]) < 1e-12);

  CHECK_THROWS_AS(downup(img, 0.5), std::invalid_argument);
}

TEST_CASE("degrade config validation and sigma rule") {
  DegradeConfig good;
  CHECK_NOTHROW(good.validate());

  DegradeConfig c;
  c.kernel_min = 2;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.kernel_max = c.kernel_min - 2;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.ratio_min = 0.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.ratio_max = c.ratio_min - 0.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.mix_clean = -0.1;
  c.mix_blur += 0.1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.mix_clean += 0.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.sigma_rule = SigmaRule::kFixed;
  c.sigma_fixed = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  DegradeConfig auto_rule;
  CHECK(std::abs(auto_rule.sigma_for(1) - 0.5) < 1e-12);
  CHECK(std::abs(auto_rule.sigma_for(3) - 0.8) < 1e-12);
  CHECK(std::abs(auto_rule.sigma_for(5) - 1.1) < 1e-12);
  CHECK(std::abs(auto_rule.sigma_for(7) - 1.4) < 1e-12);

  DegradeConfig fixed;
  fixed.sigma_rule = SigmaRule::kFixed;
  fixed.sigma_fixed = 2.25;
  CHECK(fixed.sigma_for(3) == 2.25);
  CHECK(fixed.sigma_for(9) == 2.25);
}

TEST_CASE("degrade branches replay the documented draw sequence") {
  RenderStyle plain;
  plain.randomize = false;
  Image hq = render_text("a7k", 0, plain);

  DegradeConfig clean;
  clean.mix_clean = 1.0;
  clean.mix_blur = clean.mix_downup = clean.mix_both = 0.0;
  CHECK(images_equal(degrade(hq, 5, clean), hq));

  DegradeConfig blur_only;
  blur_only.mix_clean = blur_only.mix_downup = blur_only.mix_both = 0.0;
  blur_only.mix_blur = 1.0;
  blur_only.kernel_min = 3;
  blur_only.kernel_max = 9;
  for (uint64_t seed : {1ULL, 123ULL, 777ULL}) {
    Rng r(seed);
    r.uniform();  // branch draw
    int k = 3 + 2 * r.uniform_int(4);
    Image want = blur(hq, gaussian_kernel(k, blur_only.sigma_for(k)));
    CHECK(images_equal(degrade(hq, seed, blur_only), want));
  }

  DegradeConfig du_only;
  du_only.mix_clean = du_only.mix_blur = du_only.mix_both = 0.0;
  du_only.mix_downup = 1.0;
  du_only.ratio_min = 1.5;
  du_only.ratio_max = 3.0;
  for (uint64_t seed : {2ULL, 50ULL}) {
    Rng r(seed);
    r.uniform();
    double ratio = r.uniform(1.5, 3.0);
    CHECK(images_equal(degrade(hq, seed, du_only), downup(hq, ratio)));
  }

  DegradeConfig both;
  both.mix_clean = both.mix_blur = both.mix_downup = 0.0;
  both.mix_both = 1.0;
  both.kernel_min = 3;
  both.kernel_max = 7;
  both.ratio_min = 1.2;
  both.ratio_max = 2.0;
  for (uint64_t seed : {9ULL, 404ULL}) {
    Rng r(seed);
    r.uniform();
    int k = 3 + 2 * r.uniform_int(3);
    double ratio = r.uniform(1.2, 2.0);
    Image want = downup(blur(hq, gaussian_kernel(k, both.sigma_for(k))), ratio);
    CHECK(images_equal(degrade(hq, seed, both), want));
  }

  CHECK(images_equal(degrade(hq, 123, both), degrade(hq, 123, both)));

  // Degenerate knobs collapse every branch to the identity.
  DegradeConfig ident;
  ident.mix_clean = ident.mix_blur = ident.mix_downup = 0.0;
  ident.mix_both = 1.0;
  ident.kernel_min = ident.kernel_max = 1;
  ident.ratio_min = ident.ratio_max = 1.0;
  CHECK(images_equal(degrade(hq, 31337, ident), hq));
}

TEST_CASE("deterministic render centers the largest fitting scale") {
  RenderStyle plain;
  plain.randomize = false;
  Image img = render_text("a", 1, plain);
  CHECK(images_equal(img, render_text("a", 999, plain)));
  REQUIRE(img.h == kCanvasH);
  REQUIRE(img.w == kCanvasW);

  // Length 1 at scale 4: 20x28 box at (54, 2), values exactly bg/fg.
  int fg_count = 0;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      double v = img.at(y, x);
      REQUIRE((v == 0.1 || v == 0.9));
      if (v == 0.9) {
        ++fg_count;
        CHECK(y >= 2);
        CHECK(y < 30);
        CHECK(x >= 54);
        CHECK(x < 74);
      }
    }
  CHECK(fg_count == glyph_weight('a') * 16);
}

TEST_CASE("randomized render keeps contrast and stays in range") {
  RenderStyle noiseless;
  noiseless.noise_amp = 0.0;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    Image img = render_text("fox3", seed, noiseless);
    double lo = 2.0, hi = -1.0;
    for (double v : img.data) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(hi - lo >= 0.35 - 1e-9);
  }

  std::string letters = "abcdefgh";
  for (int len = 1; len <= 8; ++len) {
    for (uint64_t seed = 100; seed < 103; ++seed) {
      Image img = render_text(letters.substr(0, static_cast<size_t>(len)), seed + static_cast<uint64_t>(len));
      double lo = 2.0, hi = -1.0;
      for (double v : img.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      double mid = 0.5 * (lo + hi);
      int above = 0;
      for (double v : img.data) above += v > mid ? 1 : 0;
      CAPTURE(len);
      CHECK(above >= 20);
    }
  }

  CHECK_THROWS_AS(render_text("", 1), std::invalid_argument);
  CHECK_THROWS_AS(render_text("a!", 1), std::invalid_argument);
  CHECK_THROWS_AS(render_text(std::string(11, 'a'), 1), std::invalid_argument);
}

TEST_CASE("build_dataset is reproducible and covers all lengths") {
  TempDir td("synth");
  Charset cs("01234567");
  std::string m1 = build_dataset(500, cs, 4, 1234, td / "a");
  std::string m2 = build_dataset(500, cs, 4, 1234, td / "b");
  CHECK(read_file(m1) == read_file(m2));
  CHECK(read_file(td / "a/img/000000.png") == read_file(td / "b/img/000000.png"));
  CHECK(read_file(td / "a/img/000499.png") == read_file(td / "b/img/000499.png"));

  std::string m3 = build_dataset(500, cs, 4, 4321, td / "c");
  CHECK(read_file(m1) != read_file(m3));

  std::vector<ManifestEntry> entries = read_manifest(m1);
  REQUIRE(entries.size() == 500);
  CHECK(entries[0].id == "000000");
  CHECK(entries[499].id == "000499");
  int len_count[5] = {};
  for (const ManifestEntry& e : entries) {
    REQUIRE(e.label.size() >= 1);
    REQUIRE(e.label.size() <= 4);
    for (char ch : e.label) CHECK(cs.contains(ch));
    len_count[e.label.size()] += 1;
  }
  for (int len = 1; len <= 4; ++len) {
    CAPTURE(len);
    CHECK(len_count[len] >= 50);
  }

  CHECK_THROWS_AS(build_dataset(0, cs, 4, 1, td / "z"), std::invalid_argument);
  CHECK_THROWS_AS(build_dataset(3, cs, 0, 1, td / "z"), std::invalid_argument);
}

TEST_CASE("manifest parsing names the offending line and skips unknown fields") {
  TempDir td("manifest");
  std::string path = td / "m.jsonl";
  {
    std::ofstream f(path, std::ios::binary);
    f << R"({"id":"000000","label":"ab","hq":"img/a.png","seed":7,"extra":true})" << "\n";
    f << "\n";
    f << R"({"id":"000001","label":"z","hq":"img/b.png","seed":8})" << "\n";
  }
  std::vector<ManifestEntry> entries = read_manifest(path);
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].id == "000000");
  CHECK(entries[0].label == "ab");
  CHECK(entries[0].hq_rel == "img/a.png");
  CHECK(entries[0].seed == 7);
  CHECK(entries[1].seed == 8);

  std::string bad = td / "bad.jsonl";
  {
    std::ofstream f(bad, std::ios::binary);
    f << R"({"id":"000000","label":"ab","hq":"img/a.png","seed":7})" << "\n";
    f << "{not json\n";
  }
  try {
    read_manifest(bad);
    FAIL("expected parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  std::string missing_field = td / "mf.jsonl";
  {
    std::ofstream f(missing_field, std::ios::binary);
    f << R"({"id":"000000","label":"ab","seed":7})" << "\n";
  }
  try {
    read_manifest(missing_field);
    FAIL("expected missing-field error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }

  CHECK_THROWS_AS(read_manifest(td / "absent.jsonl"), std::runtime_error);
}

TEST_CASE("paired dataset regenerates degradations from stored seeds") {
  TempDir td("paired");
  Charset cs("ab");
  std::string manifest = build_dataset(4, cs, 3, 99, td / "d");

  DegradeConfig cfg;
  cfg.mix_clean = cfg.mix_downup = cfg.mix_both = 0.0;
  cfg.mix_blur = 1.0;
  cfg.kernel_min = 3;
  cfg.kernel_max = 9;
  PairedDataset ds(manifest, cfg);
  REQUIRE(ds.size() == 4);
  CHECK(ds.entry(0).id == "000000");
  CHECK(ds.entry(3).id == "000003");

  PairedSample s1 = ds.get(1), s1b = ds.get(1);
  CHECK(images_equal(s1.dq, s1b.dq));
  CHECK(s1.label == ds.entry(1).label);
  CHECK(s1.seed == ds.entry(1).seed);
  CHECK(images_equal(s1.hq, ds.hq(1)));
  CHECK(images_equal(s1.dq, degrade(ds.hq(1), ds.entry(1).seed, cfg)));

  PairedSample salted = ds.get_salted(1, 7);
  CHECK(salted.seed == derive_seed(ds.entry(1).seed, 7));
  CHECK(salted.seed != s1.seed);
  CHECK(images_equal(salted.dq, degrade(ds.hq(1), salted.seed, cfg)));
  CHECK(images_equal(ds.get_salted(1, 7).dq, salted.dq));
  CHECK(ds.get_salted(1, 8).seed != salted.seed);

  // A manifest entry pointing at a missing file fails with its line number.
  std::string broken = td / "broken.jsonl";
  {
    std::ofstream f(broken, std::ios::binary);
    f << R"({"id":"000000","label":"a","hq":"img/absent.png","seed":1})" << "\n";
  }
  CHECK_THROWS_AS(PairedDataset(broken, cfg), std::runtime_error);
}

TEST_CASE("png round trip is exact at 8-bit resolution") {
  TempDir td("png");
  Image img(13, 7);
  for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = ((i * 37 + 11) % 256) / 255.0;
  std::string path = td / "t.png";
  write_png_gray8(path, img);
  Image back = read_png_gray(path);
  REQUIRE(back.h == 13);
  REQUIRE(back.w == 7);
  CHECK(back.data == img.data);

  // Arbitrary values land on the nearest 8-bit level.
  Image fine(2, 3);
  fine.data = {0.0011, 0.5, 0.9994, 0.25, 0.75, 1.0};
  write_png_gray8(path, fine);
  CHECK(read_png_gray(path).data == quantize8(fine).data);

  write_png_gray8(path, img);
  std::string bytes1 = read_file(path);
  write_png_gray8(path, img);
  CHECK(read_file(path) == bytes1);

  CHECK_THROWS_AS(write_png_gray8(td / "no/such/dir/t.png", img), std::runtime_error);
  CHECK_THROWS_AS(read_png_gray(td / "absent.png"), std::runtime_error);
}

TEST_CASE("png decoder handles foreign color types, depths and filters") {
  TempDir td("pngdec");
  std::string path = td / "f.png";

  // Truecolor 8-bit: Rec.601 luminance.
  {
    std::vector<uint8_t> raw = {0, 255, 0, 0, 0, 255, 0,    // row 0: red, green
                                0, 0, 0, 255, 255, 255, 255};  // row 1: blue, white
    write_bytes(path, make_png(2, 2, 8, 2, raw));
    Image img = read_png_gray(path);
    REQUIRE(img.h == 2);
    REQUIRE(img.w == 2);
    CHECK(std::abs(img.at(0, 0) - 0.299) < 1e-12);
    CHECK(std::abs(img.at(0, 1) - 0.587) < 1e-12);
    CHECK(std::abs(img.at(1, 0) - 0.114) < 1e-12);
    CHECK(std::abs(img.at(1, 1) - 1.0) < 1e-12);
  }

  // Greyscale 16-bit: high byte only.
  {
    std::vector<uint8_t> raw = {0, 0x00, 0x00, 0x7F, 0x3C, 0xFF, 0x01};
    write_bytes(path, make_png(3, 1, 16, 0, raw));
    Image img = read_png_gray(path);
    CHECK(img.at(0, 0) == 0.0);
    CHECK(img.at(0, 1) == 127.0 / 255.0);
    CHECK(img.at(0, 2) == 1.0);
  }

  // Grey+alpha and RGBA: alpha ignored.
  {
    std::vector<uint8_t> raw = {0, 200, 77};
    write_bytes(path, make_png(1, 1, 8, 4, raw));
    CHECK(read_png_gray(path).at(0, 0) == 200.0 / 255.0);

    std::vector<uint8_t> raw2 = {0, 10, 20, 30, 40};
    write_bytes(path, make_png(1, 1, 8, 6, raw2));
    double want = (0.299 * 10 + 0.587 * 20 + 0.114 * 30) / 255.0;
    CHECK(std::abs(read_png_gray(path).at(0, 0) - want) < 1e-12);
  }

  // All five filter types on an 8-bit grey image, one per row.
  {
    uint8_t px[5][4] = {{10, 250, 3, 80},
                        {90, 91, 200, 7},
                        {15, 15, 255, 0},
                        {77, 12, 150, 150},
                        {0, 128, 64, 32}};
    std::vector<uint8_t> raw;
    for (int r = 0; r < 5; ++r) {
      uint8_t filter = static_cast<uint8_t>(r);
      raw.push_back(filter);
      for (int i = 0; i < 4; ++i) {
        int a = i > 0 ? px[r][i - 1] : 0;
        int b = r > 0 ? px[r - 1][i] : 0;
        int cc = (r > 0 && i > 0) ? px[r - 1][i - 1] : 0;
        int pred = 0;
        switch (filter) {
          case 0: pred = 0; break;
          case 1: pred = a; break;
          case 2: pred = b; break;
          case 3: pred = (a + b) / 2; break;
          case 4: pred = ref_paeth(static_cast<uint8_t>(a), static_cast<uint8_t>(b), static_cast<uint8_t>(cc)); break;
        }
        raw.push_back(static_cast<uint8_t>(px[r][i] - pred));
      }
    }
    write_bytes(path, make_png(4, 5, 8, 0, raw));
    Image img = read_png_gray(path);
    REQUIRE(img.h == 5);
    REQUIRE(img.w == 4);
    for (int r = 0; r < 5; ++r)
      for (int i = 0; i < 4; ++i) CHECK(img.at(r, i) == px[r][i] / 255.0);
  }

  // Split IDAT streams concatenate before inflation.
  {
    std::vector<uint8_t> raw = {0, 40, 80};
    std::vector<uint8_t> z = deflate_bytes(raw);
    REQUIRE(z.size() >= 2);
    std::vector<uint8_t> ihdr;
    put_u32be(ihdr, 2);
    put_u32be(ihdr, 1);
    for (uint8_t v : {8, 0, 0, 0, 0}) ihdr.push_back(v);
    const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    std::vector<uint8_t> file(sig, sig + 8);
    append_chunk(file, "IHDR", ihdr);
    append_chunk(file, "IDAT", {z.begin(), z.begin() + 1});
    append_chunk(file, "IDAT", {z.begin() + 1, z.end()});
    append_chunk(file, "IEND", {});
    write_bytes(path, file);
    Image img = read_png_gray(path);
    CHECK(img.at(0, 0) == 40.0 / 255.0);
    CHECK(img.at(0, 1) == 80.0 / 255.0);
  }

  // Malformed inputs are rejected.
  {
    write_bytes(path, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    CHECK_THROWS_AS(read_png_gray(path), std::runtime_error);

    std::vector<uint8_t> ok = make_png(1, 1, 8, 0, {0, 5});
    std::vector<uint8_t> trunc(ok.begin(), ok.begin() + 20);
    write_bytes(path, trunc);
    CHECK_THROWS_AS(read_png_gray(path), std::runtime_error);

    write_bytes(path, make_png(1, 1, 8, 0, {0, 5}, 1));  // interlaced
    CHECK_THROWS_AS(read_png_gray(path), std::runtime_error);

    write_bytes(path, make_png(1, 1, 8, 3, {0, 5}));  // palette
    CHECK_THROWS_AS(read_png_gray(path), std::runtime_error);

    write_bytes(path, make_png(1, 1, 4, 0, {0, 5}));  // sub-byte depth
    CHECK_THROWS_AS(read_png_gray(path), std::runtime_error);

    write_bytes(path, make_png(1, 1, 8, 0, {5, 5}));  // filter byte 5
    CHECK_THROWS_AS(read_png_gray(path), std::runtime_error);
  }
}
