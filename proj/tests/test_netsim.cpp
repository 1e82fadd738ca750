#include <gtest/gtest.h>

#include <sstream>
#include <vector>

#include "dab/netsim.hpp"

namespace {

using dab::Endpoint;
using dab::Network;

TEST(WordCost, Conventions) {
  EXPECT_EQ(dab::word_cost(0.5), 1u);
  EXPECT_EQ(dab::word_cost(std::size_t{7}), 1u);
  const std::vector<double> x(21, 1.0);
  EXPECT_EQ(dab::word_cost(std::span<const double>(x)), 21u);
  EXPECT_EQ(dab::word_cost(dab::WireExample{x, 1}), 22u);
  EXPECT_EQ(dab::word_cost(dab::Stump{0, 0.0, 1}), 3u);
  EXPECT_EQ(dab::word_cost(std::vector<double>{1, 2, 3}), 3u);
  EXPECT_EQ(dab::word_cost(std::pair{1.0, std::size_t{2}}), 2u);
}

TEST(Network, SendAndBroadcastCounts) {
  Network net(4);
  EXPECT_EQ(net.send(Endpoint::entity(2), Endpoint::center(), 3.5), 3.5);
  EXPECT_EQ(net.stats().words, 1u);
  EXPECT_EQ(net.stats().messages, 1u);
  net.broadcast(Endpoint::center(), 1.0);
  EXPECT_EQ(net.stats().words, 5u);
  EXPECT_EQ(net.stats().messages, 5u);

  Network wide(16);
  wide.broadcast(Endpoint::center(), dab::Stump{1, 0.5, -1});
  EXPECT_EQ(wide.stats().words, 48u);
}

TEST(Network, StarTopologyOnly) {
  Network net(3);
  EXPECT_THROW(net.send(Endpoint::entity(0), Endpoint::entity(1), 1.0), dab::TopologyError);
  EXPECT_THROW(net.send(Endpoint::center(), Endpoint::center(), 1.0), dab::TopologyError);
  EXPECT_THROW(net.send(Endpoint::center(), Endpoint::entity(3), 1.0), dab::TopologyError);
  EXPECT_THROW(net.broadcast(Endpoint::entity(0), 1.0), dab::TopologyError);
  EXPECT_EQ(net.stats().words, 0u);
  EXPECT_THROW(Network(0), dab::Error);
}

TEST(Network, RoundBracketing) {
  Network net(2);
  net.send(Endpoint::entity(0), Endpoint::center(), 1.0);  // setup traffic
  net.begin_round();
  EXPECT_THROW(net.begin_round(), dab::Error);
  net.broadcast(Endpoint::center(), dab::Stump{});
  net.end_round();
  EXPECT_THROW(net.end_round(), dab::Error);
  net.begin_round();
  net.send(Endpoint::center(), Endpoint::entity(1), std::vector<double>{1, 2});
  net.end_round();

  const auto& s = net.stats();
  EXPECT_EQ(s.rounds, 2u);
  ASSERT_EQ(s.per_round.size(), 2u);
  EXPECT_EQ(s.per_round[0], (std::pair<std::size_t, std::size_t>{1, 6}));
  EXPECT_EQ(s.per_round[1], (std::pair<std::size_t, std::size_t>{2, 2}));
  EXPECT_EQ(s.out_of_round_words(), 1u);
}

TEST(Network, AccountingIdentity) {
  // Sum of per-message costs equals the reported total.
  Network net(5);
  std::size_t expected = 0;
  const std::vector<double> x(9, 0.0);
  for (std::size_t i = 0; i < 5; ++i) {
    net.send(Endpoint::entity(i), Endpoint::center(), dab::WireExample{x, -1});
    expected += 10;
    net.send(Endpoint::center(), Endpoint::entity(i), std::size_t{i});
    expected += 1;
  }
  net.broadcast(Endpoint::center(), std::pair{0.5, 0.25});
  expected += 10;
  EXPECT_EQ(net.stats().words, expected);
  EXPECT_EQ(net.stats().messages, 15u);
}

TEST(Network, InstrumentationExcludedUnlessEnabled) {
  Network quiet(2);
  EXPECT_EQ(quiet.instrument(Endpoint::entity(0), Endpoint::center(), 2.0), 2.0);
  EXPECT_EQ(quiet.stats().words, 0u);
  EXPECT_THROW(quiet.instrument(Endpoint::entity(0), Endpoint::entity(1), 2.0), dab::TopologyError);

  Network loud(2, true);
  loud.instrument(Endpoint::entity(0), Endpoint::center(), 2.0);
  EXPECT_EQ(loud.stats().words, 1u);
}

TEST(CommCsv, Formats) {
  Network net(1);
  net.begin_round();
  net.send(Endpoint::entity(0), Endpoint::center(), 1.0);
  net.end_round();
  std::ostringstream rounds, summary;
  dab::write_comm_csv(rounds, net.stats());
  dab::write_comm_summary(summary, net.stats());
  EXPECT_EQ(rounds.str(), "round,words\n1,1\n");
  EXPECT_EQ(summary.str(), "total_words,total_messages,total_rounds\n1,1,1\n");
}

}  // namespace
