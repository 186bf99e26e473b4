#include <gtest/gtest.h>

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "tablex/classify.hpp"
#include "tablex/json_io.hpp"
#include "test_support.hpp"

#ifndef TABLEX_ADAPTER_STUB
#error "TABLEX_ADAPTER_STUB must point at the stub executable"
#endif

namespace tablex {
namespace {

using Labeled = std::vector<std::pair<SerializedExample, CellLabel>>;

SerializedExample ex(const std::string& text, const std::string& id = "t0-r0-c0") { return {id, text, 0}; }

Labeled four_class_corpus() {
  return {{ex("100"), CellLabel::Data},      {ex("200"), CellLabel::Data},  {ex("売上"), CellLabel::Header},
          {ex("単位"), CellLabel::Metadata}, {ex("東京"), CellLabel::Attribute}};
}

TEST(NgramCounts, OrdersAndSeparator) {
  NgramConfig cfg;
  cfg.orders = {1, 2};
  const auto c = ngram_counts("ab[SEP]a", cfg);
  EXPECT_EQ(c.at("a"), 2);
  EXPECT_EQ(c.at("b"), 1);
  EXPECT_EQ(c.at("[SEP]"), 1);
  EXPECT_EQ(c.at("a\x01" "b"), 1);
  EXPECT_EQ(c.at("b\x01[SEP]"), 1);
  EXPECT_EQ(c.size(), 3u + 3u);
}

TEST(BaselineModel, PriorsAndSmoothedLikelihood) {
  // Priors and likelihood are computed over the three texts; the other two
  // labels need one example each to train, so they are added with features
  // disjoint from the ones checked.
  Labeled corpus{{ex("100"), CellLabel::Data}, {ex("200"), CellLabel::Data}, {ex("売上"), CellLabel::Header}};
  NgramConfig cfg;
  cfg.orders = {1};
  const auto three = BaselineModel::from_counts(
      cfg, {1, 1, 1, 2},
      {std::map<std::string, long long>{}, {{"売", 1}, {"上", 1}}, {}, {{"1", 1}, {"0", 4}, {"2", 1}}});
  // V = {1, 0, 2, 売, 上}: (4 + 1) / (6 + 5 + 1).
  EXPECT_NEAR(std::exp(three.log_likelihood(CellLabel::Data, "0")), 5.0 / 12.0, 1e-12);

  corpus.push_back({ex("x"), CellLabel::Metadata});
  corpus.push_back({ex("y"), CellLabel::Attribute});
  const auto m = BaselineModel::train(corpus, cfg);
  EXPECT_NEAR(std::exp(m.log_prior(CellLabel::Data)), 2.0 / 5.0, 1e-12);
  EXPECT_NEAR(std::exp(m.log_prior(CellLabel::Header)), 1.0 / 5.0, 1e-12);
  // V grows by {x, y}: (4 + 1) / (6 + 7 + 1).
  EXPECT_NEAR(std::exp(m.log_likelihood(CellLabel::Data, "0")), 5.0 / 14.0, 1e-12);
  EXPECT_NEAR(std::exp(m.log_unknown(CellLabel::Data)), 1.0 / 14.0, 1e-12);
}

TEST(BaselineModel, PriorRatioOnDataHeaderCorpus) {
  const auto m = BaselineModel::from_counts(NgramConfig{}, {1, 1, 1, 2}, {});
  const double ratio = std::exp(m.log_prior(CellLabel::Data) - m.log_prior(CellLabel::Header));
  EXPECT_NEAR(ratio, 2.0, 1e-12);
}

TEST(BaselineModel, Predictions) {
  const auto m = BaselineModel::train(four_class_corpus());
  EXPECT_EQ(m.predict(ex("300")).first, CellLabel::Data);
  EXPECT_EQ(m.predict(ex("")).first, CellLabel::Data);
  EXPECT_EQ(m.predict(ex("東京")).first, CellLabel::Attribute);
  const auto [label, scores] = m.predict(ex("売上"));
  EXPECT_EQ(label, CellLabel::Header);
  double total = 0.0;
  for (double p : scores.p) total += p;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(BaselineModel, TieGoesToCanonicalOrder) {
  Labeled corpus;
  for (auto l : kAllLabels) corpus.push_back({ex("z"), l});
  const auto m = BaselineModel::train(corpus);
  EXPECT_EQ(m.predict(ex("z")).first, CellLabel::Metadata);
  EXPECT_EQ(m.predict(ex("")).first, CellLabel::Metadata);
}

TEST(BaselineModel, MissingClassAndEmptyCorpus) {
  try {
    BaselineModel::train({{ex("1"), CellLabel::Data}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingClass);
  }
  try {
    BaselineModel::train({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCorpus);
  }
}

TEST(BaselineModel, PermutationInvariant) {
  std::mt19937_64 rng(4);
  Labeled corpus = four_class_corpus();
  for (int i = 0; i < 40; ++i) corpus.push_back({ex(std::to_string(i * 37)), CellLabel::Data});
  const auto m = BaselineModel::train(corpus);
  for (int k = 0; k < 5; ++k) {
    std::shuffle(corpus.begin(), corpus.end(), rng);
    const auto s = BaselineModel::train(corpus);
    for (const auto& probe : {"123", "売上高", "単位：百万円", ""}) {
      const auto a = m.predict(ex(probe));
      const auto b = s.predict(ex(probe));
      ASSERT_EQ(a.first, b.first);
      ASSERT_EQ(a.second.p, b.second.p);
    }
  }
}

TEST(BaselineModel, JsonRoundTripIsExact) {
  const auto m = BaselineModel::train(four_class_corpus());
  const auto j = io::to_json(m);
  const auto back = io::model_from_json(nlohmann::json::parse(j.dump()), "model");
  for (const auto& probe : {"300", "売上", "x", "東京都"}) {
    ASSERT_EQ(m.predict(ex(probe)).second.p, back.predict(ex(probe)).second.p);
  }
}

TEST(ClassifyBatch, BaselineKeepsOrder) {
  const auto m = BaselineModel::train(four_class_corpus());
  const std::vector<SerializedExample> in{ex("1", "a"), ex("売上", "b"), ex("東京", "c")};
  const auto out = classify_batch(&m, in);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].cell_id, "a");
  EXPECT_EQ(out[1].cell_id, "b");
  EXPECT_EQ(out[2].cell_id, "c");
  EXPECT_EQ(out[1].label, CellLabel::Header);
}

// ---------------------------------------------------------------------------
// Adapter

AdapterSpec stub(const std::string& args, int timeout_ms = 5000, int batch = 32) {
  AdapterSpec s;
  s.address = std::string(TABLEX_ADAPTER_STUB) + " " + args;
  s.timeout_ms = timeout_ms;
  s.batch_size = batch;
  return s;
}

std::vector<SerializedExample> three() { return {ex("1", "t0-r0-c0"), ex("2", "t0-r0-c1"), ex("3", "t0-r0-c2")}; }

TEST(Protocol, DecodeResponse) {
  const auto r = protocol::decode_response(R"({"id":"x","label":"attribute","scores":{"attribute":3,"data":1}})");
  EXPECT_EQ(r.id, "x");
  EXPECT_EQ(r.label, CellLabel::Attribute);
  EXPECT_DOUBLE_EQ(r.scores[CellLabel::Attribute], 0.75);
  EXPECT_DOUBLE_EQ(r.scores[CellLabel::Header], 0.0);
  EXPECT_EQ(protocol::decode_response(R"({"id":"x","label":"data"})").scores.p, LabelScores::uniform().p);
  for (const char* bad : {"{", "[]", R"({"id":"x"})", R"({"id":"x","label":"cell"})", R"({"id":1,"label":"data"})",
                          R"({"id":"x","label":"data","scores":{"data":-1}})"}) {
    try {
      protocol::decode_response(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ProtocolViolation) << bad;
    }
  }
}

TEST(Adapter, FixedLabel) {
  Adapter a(stub("--fixed header"));
  const auto out = classify_batch(&a, three());
  ASSERT_EQ(out.size(), 3u);
  for (const auto& c : out) EXPECT_EQ(c.label, CellLabel::Header);
}

TEST(Adapter, OutOfOrderResponsesMatchedById) {
  Adapter a(stub("--fixed attribute --hold 3"));
  std::vector<std::string> warnings;
  const auto out = classify_batch(&a, three(), &warnings);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].cell_id, "t0-r0-c0");
  EXPECT_EQ(out[2].cell_id, "t0-r0-c2");
  for (const auto& c : out) EXPECT_EQ(c.label, CellLabel::Attribute);
  EXPECT_TRUE(warnings.empty());
}

TEST(Adapter, TimeoutOnOneItemFallsBack) {
  Adapter a(stub("--fixed header --delay-id t0-r0-c1 --delay-ms 2000", 300));
  std::vector<std::string> warnings;
  const auto out = classify_batch(&a, three(), &warnings);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].label, CellLabel::Header);
  EXPECT_EQ(out[1].label, CellLabel::Data);
  EXPECT_EQ(out[1].scores.p, LabelScores::uniform().p);
  EXPECT_EQ(out[2].label, CellLabel::Header);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("t0-r0-c1"), std::string::npos);
}

TEST(Adapter, DroppedItemFallsBackAcrossBatches) {
  Adapter a(stub("--fixed metadata --drop-id t0-r0-c0", 300, 2));
  std::vector<std::string> warnings;
  const auto out = classify_batch(&a, three(), &warnings);
  EXPECT_EQ(out[0].label, CellLabel::Data);
  EXPECT_EQ(out[1].label, CellLabel::Metadata);
  EXPECT_EQ(out[2].label, CellLabel::Metadata);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Adapter, UnavailableWhenPeerExits) {
  Adapter a(stub("--exit"));
  try {
    classify_batch(&a, three());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AdapterUnavailable);
  }
}

TEST(Adapter, UnavailableWhenCommandMissing) {
  AdapterSpec s;
  s.address = "/nonexistent/tablex-adapter";
  try {
    Adapter a(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AdapterUnavailable);
  }
}

TEST(Adapter, MalformedResponse) {
  Adapter a(stub("--garbage"));
  try {
    classify_batch(&a, three());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ProtocolViolation);
  }
}

TEST(Adapter, LoopbackMatchesInProcessModel) {
  testing::TempDir dir;
  const auto m = BaselineModel::train(four_class_corpus());
  io::write_file_atomic(dir / "model.json", io::to_json(m).dump());
  Adapter a(stub("--proxy-model " + (dir / "model.json").string(), 5000, 7));
  std::vector<SerializedExample> in;
  const std::vector<std::string> words{"100", "売上", "東京", "単位", "2", "x", ""};
  for (int i = 0; i < 50; ++i) in.push_back(ex(words[static_cast<std::size_t>(i) % words.size()], "c" + std::to_string(i)));
  const auto local = classify_batch(&m, in);
  const auto remote = classify_batch(&a, in);
  ASSERT_EQ(local.size(), remote.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    EXPECT_EQ(local[i].label, remote[i].label);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(local[i].scores.p[k], remote[i].scores.p[k], 1e-12);
  }
}

TEST(Adapter, Tcp) {
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  ASSERT_GE(listener, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ASSERT_EQ(::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)), 0);
  ASSERT_EQ(::listen(listener, 1), 0);
  socklen_t len = sizeof(addr);
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
  const int port = ntohs(addr.sin_port);

  std::thread server([listener] {
    const int fd = ::accept(listener, nullptr, nullptr);
    std::string buf;
    char chunk[4096];
    for (;;) {
      const ssize_t n = ::read(fd, chunk, sizeof(chunk));
      if (n <= 0) break;
      buf.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = buf.find('\n')) != std::string::npos) {
        const auto req = nlohmann::json::parse(buf.substr(0, nl));
        buf.erase(0, nl + 1);
        AdapterResponse r;
        r.id = req["id"].get<std::string>();
        r.label = CellLabel::Attribute;
        const auto line = protocol::encode_response(r);
        ::send(fd, line.data(), line.size(), MSG_NOSIGNAL);
      }
    }
    ::close(fd);
  });

  {
    AdapterSpec s;
    s.transport = AdapterTransport::Tcp;
    s.address = "127.0.0.1:" + std::to_string(port);
    Adapter a(s);
    const auto out = classify_batch(&a, three());
    ASSERT_EQ(out.size(), 3u);
    for (const auto& c : out) EXPECT_EQ(c.label, CellLabel::Attribute);
  }
  server.join();
  ::close(listener);
}

TEST(AdapterSpec, Validation) {
  AdapterSpec s;
  EXPECT_THROW(s.validate(), Error);
  s.address = "x";
  s.timeout_ms = 0;
  EXPECT_THROW(s.validate(), Error);
  s.timeout_ms = 1;
  s.batch_size = 0;
  EXPECT_THROW(s.validate(), Error);
}

}  // namespace
}  // namespace tablex
