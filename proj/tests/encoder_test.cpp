#include <gtest/gtest.h>

#include <sstream>

#include "spancat/encoder.hpp"
#include "spancat/synthetic.hpp"
#include "spancat/vectors.hpp"
#include "test_util.hpp"

using namespace spancat;
using spancat::test::excerpt;
using spancat::test::TempFile;

TEST(Features, ShapeAndCase) {
  EXPECT_EQ(word_shape("Smith"), "Xxxxx");
  EXPECT_EQ(word_shape("1999"), "dddd");
  EXPECT_EQ(word_shape("abcdefgh"), "xxxx");
  EXPECT_EQ(lower_ascii("HeLLo"), "hello");
  auto a = token_features("Smith", 1000);
  auto b = token_features("Smith", 1000);
  EXPECT_EQ(a, b);
  for (auto k : a) EXPECT_LT(k, 1000u);
}

TEST(Embedder, IdenticalSurfacesGiveIdenticalRows) {
  HashedEmbedder<float> emb(16, 4096, 3, 0.25);
  Excerpt e = excerpt("a", {{"the", "cat", "saw", "the"}});
  Matrix<float> x = emb.forward(e.tokens);
  EXPECT_EQ(x.rows(), 4);
  EXPECT_EQ(x.cols(), 16);
  EXPECT_TRUE(x.row(0).isApprox(x.row(3)));
  EXPECT_FALSE(x.row(0).isApprox(x.row(1)));
  EXPECT_TRUE(emb.materialized_buckets().empty());
}

TEST(Embedder, ZeroTableGivesZeroEncoding) {
  HashedEmbedder<float> emb(8, 512, 3, 0.0);
  Excerpt e = excerpt("a", {{"any", "words", "here"}});
  EXPECT_TRUE(emb.forward(e.tokens).isZero());
}

TEST(Embedder, UnseenTokenNonzeroAfterOneUpdate) {
  // Zero table; one gradient step on "walking" moves the suffix and shape
  // rows that the never-seen "talking" shares.
  HashedEmbedder<float> emb(8, 1u << 16, 3, 0.0);
  Excerpt seen = excerpt("a", {{"walking"}});
  Excerpt unseen = excerpt("b", {{"talking"}});
  emb.backward(seen.tokens, Matrix<float>::Ones(1, 8));
  std::vector<Param<float>*> params;
  emb.collect(params);
  for (auto* p : params) p->value -= 0.1f * p->grad;
  EXPECT_FALSE(emb.forward(unseen.tokens).isZero());
}

TEST(BiLstm, ZeroWeightsGiveZeroOutput) {
  BiLstm<float> lstm(6, 5);
  Matrix<float> x = Matrix<float>::Random(4, 6);
  EXPECT_TRUE(lstm.forward(x).isZero());
}

TEST(BiLstm, OutputShape) {
  BiLstm<float> lstm(96, 200);
  Rng rng(1);
  lstm.init(rng);
  Matrix<float> y = lstm.forward(Matrix<float>::Random(5, 96));
  EXPECT_EQ(y.rows(), 5);
  EXPECT_EQ(y.cols(), 400);
  EXPECT_TRUE(y.allFinite());
}

TEST(BiLstm, DirectionsSeeOppositeContext) {
  BiLstm<double> lstm(3, 4);
  Rng rng(2);
  lstm.init(rng);
  Matrix<double> x = Matrix<double>::Random(5, 3);
  Matrix<double> y0 = lstm.forward(x);
  x.row(4).setConstant(3.0);
  Matrix<double> y1 = lstm.forward(x);
  // forward half of token 0 cannot see token 4; backward half can
  EXPECT_TRUE(y0.row(0).leftCols(4).isApprox(y1.row(0).leftCols(4)));
  EXPECT_FALSE(y0.row(0).rightCols(4).isApprox(y1.row(0).rightCols(4)));
}

TEST(Encoder, ModesAndDims) {
  EncoderConfig c;
  c.embed_dim = 96;
  c.external_dim = 300;
  set_encoder_mode(c, "dual");
  EXPECT_EQ(c.base_dim(), 396);
  EXPECT_EQ(c.output_dim(), 396);
  set_encoder_mode(c, "dual+lstm");
  EXPECT_EQ(c.output_dim(), 400);
  EXPECT_EQ(encoder_mode_name(c), "dual+lstm");
  EXPECT_THROW(set_encoder_mode(c, "fancy"), DataError);
  EncoderConfig bad;
  bad.hash_buckets = (1u << 24) + 1;
  EXPECT_THROW(bad.validate(), DataError);
  bad = {};
  bad.source = EncoderSource::External;
  EXPECT_THROW(bad.validate(), DataError);
}

TEST(Encoder, DualZeroTrainableBranch) {
  HashedEmbedder<float> zero(4, 64, 1, 0.0);
  Excerpt e = excerpt("a", {{"x", "y"}});
  Matrix<float> frozen = Matrix<float>::Random(2, 3);
  Matrix<float> out = dual_encode(e, zero, &frozen);
  ASSERT_EQ(out.cols(), 7);
  EXPECT_TRUE(out.leftCols(4).isZero());
  EXPECT_TRUE(out.rightCols(3).isApprox(frozen));
  EXPECT_THROW(dual_encode<float>(e, zero, nullptr), DataError);
}

TEST(Encoder, FrozenBranchReceivesNoGradient) {
  EncoderConfig c;
  c.embed_dim = 4;
  c.external_dim = 3;
  c.hash_buckets = 128;
  c.source = EncoderSource::Dual;
  Encoder<float> enc(c, 5);
  Excerpt e = excerpt("a", {{"x", "y"}});
  Matrix<float> frozen = Matrix<float>::Random(2, 3);
  Matrix<float> before = frozen;
  EncoderCache<float> cache;
  Matrix<float> out = enc.forward(e, &frozen, &cache);
  enc.backward(e, cache, Matrix<float>::Ones(out.rows(), out.cols()));
  EXPECT_EQ(frozen, before);
  std::vector<Param<float>*> params;
  enc.collect(params);
  for (auto* p : params) EXPECT_EQ(p->grad.cols(), 4) << p->name;
}

TEST(Vectors, RoundTripIsBitwise) {
  SyntheticConfig sc;
  sc.excerpts = 12;
  Corpus c = make_synthetic_corpus(sc);
  ExternalVectors v = make_lookup_vectors(c, 7, 3);
  std::vector<std::string> order;
  for (const auto& e : c) order.push_back(e.id);
  TempFile f;
  save_vectors(f.path(), v, 7, order);
  ExternalVectors back = load_external_vectors(f.path(), c, 7);
  ASSERT_EQ(back.size(), v.size());
  for (const auto& [id, m] : v) {
    const Matrix<float>& b = back.at(id);
    ASSERT_EQ(b.size(), m.size());
    EXPECT_EQ(std::memcmp(b.data(), m.data(), sizeof(float) * m.size()), 0);
  }
}

TEST(Vectors, MissingExcerptNamed) {
  SyntheticConfig sc;
  sc.excerpts = 4;
  Corpus c = make_synthetic_corpus(sc);
  ExternalVectors v = make_lookup_vectors(c, 5, 3);
  v.erase(c[2].id);
  std::vector<std::string> order;
  for (const auto& [id, _] : v) order.push_back(id);
  TempFile f;
  save_vectors(f.path(), v, 5, order);
  try {
    load_external_vectors(f.path(), c, 5);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(c[2].id), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_external_vectors(f.path(), {}, 6), DataError);
}

TEST(Vectors, CorruptFileRejected) {
  TempFile f("SPVEC2 nonsense");
  EXPECT_THROW(load_external_vectors(f.path(), {}, 5), DataError);
}
