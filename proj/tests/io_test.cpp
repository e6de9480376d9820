#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "aida/io.hpp"

namespace aida {
namespace {

TEST(Io, QuantizeRoundsHalfEven) {
  EXPECT_EQ(quantize(0.5, 0, 8), 0);
  EXPECT_EQ(quantize(1.5, 0, 8), 2);
  EXPECT_EQ(quantize(-2.5, 0, 8), -2);
  EXPECT_EQ(quantize(0.3, 4, 8), 5);  // 4.8
  EXPECT_EQ(quantize(100.0, 0, 4), 7);
  EXPECT_EQ(quantize(-100.0, 0, 4), -8);
  EXPECT_EQ(quantize(-3.0, 0, 4, false), 0);
  EXPECT_EQ(quantize(300.0, 0, 8, false), 255);
}

TEST(Io, MatrixMarketInteger) {
  std::istringstream in(
      "%%MatrixMarket matrix coordinate integer general\n"
      "% comment\n"
      "2 3 3\n"
      "1 2 2\n"
      "2 1 1\n"
      "2 3 3\n");
  const auto m = read_matrix_market(in, 8, 0);
  EXPECT_EQ(m.n_rows, 2u);
  EXPECT_EQ(m.n_cols, 3u);
  ASSERT_EQ(m.nnz(), 3u);
  EXPECT_EQ(m.entries[0].col, 1u);
  EXPECT_EQ(m.entries[2].value, 3);
}

TEST(Io, MatrixMarketRealAndSymmetric) {
  std::istringstream in(
      "%%MatrixMarket matrix coordinate real symmetric\n"
      "2 2 2\n"
      "1 1 0.25\n"
      "2 1 -0.5\n");
  const auto m = read_matrix_market(in, 8, 4);
  ASSERT_EQ(m.nnz(), 3u);
  EXPECT_EQ(m.entries[0].value, 4);
  EXPECT_EQ(m.entries[1].value, -8);
  EXPECT_EQ(m.entries[2].value, -8);
  EXPECT_EQ(m.entries[1].row, 0u);
  EXPECT_EQ(m.entries[1].col, 1u);
}

TEST(Io, MatrixMarketPatternAndZeros) {
  std::istringstream in(
      "%%MatrixMarket matrix coordinate pattern general\n"
      "3 3 2\n"
      "1 1\n"
      "3 2\n");
  EXPECT_EQ(read_matrix_market(in, 4, 0).nnz(), 2u);
  std::istringstream zeros(
      "%%MatrixMarket matrix coordinate real general\n"
      "2 2 2\n"
      "1 1 0.01\n"
      "2 2 1\n");
  EXPECT_EQ(read_matrix_market(zeros, 8, 0).nnz(), 1u);  // rounds to zero and is dropped
}

TEST(Io, MatrixMarketErrors) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_matrix_market(in, 8, 0);
  };
  EXPECT_THROW(parse(""), ConfigError);
  EXPECT_THROW(parse("%%MatrixMarket matrix array real general\n1 1\n1\n"), ConfigError);
  EXPECT_THROW(parse("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n"),
               ConfigError);
  EXPECT_THROW(parse("%%MatrixMarket matrix coordinate integer general\n2 2 2\n1 1 1\n"),
               ConfigError);
  EXPECT_THROW(parse("%%MatrixMarket matrix coordinate integer general\n2 2 1\n3 1 1\n"),
               ConfigError);
  EXPECT_THROW(parse("%%MatrixMarket matrix coordinate integer general\n2 2 2\n1 1 1\n1 1 2\n"),
               ConfigError);
  EXPECT_THROW(parse("%%MatrixMarket matrix coordinate integer general\n2 2 1\n1 1 x\n"),
               ConfigError);
}

TEST(IoProperty, MatrixMarketRoundTrip) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    SparseMatrix m;
    m.n_rows = 1 + rng() % 30;
    m.n_cols = 1 + rng() % 30;
    m.value_bits = 8;
    for (std::size_t r = 0; r < m.n_rows; ++r) {
      for (std::size_t c = 0; c < m.n_cols; ++c) {
        if (rng() % 4 == 0) m.entries.push_back({r, c, static_cast<std::int64_t>(rng() % 255) - 127});
      }
    }
    std::erase_if(m.entries, [](const SparseEntry& e) { return e.value == 0; });
    std::stringstream s;
    write_matrix_market(s, m);
    ASSERT_EQ(read_matrix_market(s, 8, 0), m);
  }
}

TEST(Io, ActivationsSparseWithHeader) {
  std::istringstream in("index,value\n3,7\n0,2\n5,0\n");
  const auto a = read_activations(in, {8, false, 0});
  EXPECT_EQ(a.entries(), (std::vector<Activation>{{0, 2}, {3, 7}}));
}

TEST(Io, ActivationsDense) {
  std::istringstream in("# x\n1\n0\n0.5\n-1\n");
  const auto a = read_activations(in, {8, true, 2});
  EXPECT_EQ(a.entries(), (std::vector<Activation>{{0, 1}, {2, 2}, {3, -1}}));
}

TEST(Io, ActivationsErrors) {
  std::istringstream mixed("0,1\n5\n");
  EXPECT_THROW(read_activations(mixed, {8, false, 0}), ConfigError);
  std::istringstream range("0,300\n");
  EXPECT_THROW(read_activations(range, {8, false, 0}), ConfigError);
  std::istringstream dup("1,1\n1,2\n");
  EXPECT_THROW(read_activations(dup, {8, false, 0}), ConfigError);
  std::istringstream junk("abc\n");
  EXPECT_THROW(read_activations(junk, {8, false, 0}), ConfigError);
}

TEST(Io, Lut) {
  std::istringstream in("input,output\n-1,5\n0,6\n");
  EXPECT_EQ(read_lut(in).size(), 2u);
  std::istringstream bad("0,1\nx,2\n");
  EXPECT_THROW(read_lut(bad), ConfigError);
}

TEST(Io, TraceLines) {
  ApState ap(4, 3);
  ap.enable_trace(true);
  ap.set_stage("multiply");
  KeyMask cmp(3), wr(3);
  cmp.set(0, false);
  wr.set(2, true);
  ap.compare_write(cmp, wr);
  ap.if_match();
  std::ostringstream out;
  EXPECT_EQ(write_trace(out, ap.counters().log, 1), 1u);
  EXPECT_EQ(out.str(),
            "{\"seq\":0,\"kind\":\"compare_write\",\"stage\":\"multiply\",\"compare_columns\":1,"
            "\"write_columns\":1,\"tagged_rows\":4,\"total_rows\":4}\n");
}

}  // namespace
}  // namespace aida
