#include "lanescape/lane_graph.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include <gtest/gtest.h>

#include "lanescape/error.h"
#include "lanescape/graphml.h"
#include "testing.h"

namespace lanescape {
namespace {

using testing::FixtureText;
using testing::OutDegreeZeroOracle;
using testing::ReachableOracle;

LaneGraph StraightGraph(double spacing = 5.0) {
  return BuildLaneGraph(ParseOpenDrive(FixtureText("fixture_straight.xodr")),
                        "fixture_straight", spacing);
}

std::string StraightId(int lane, int index) {
  return "fixture_straight:1:" + std::to_string(lane) + ":" +
         std::to_string(index);
}

std::map<EdgeRelation, int> RelationCounts(const LaneGraph& graph) {
  std::map<EdgeRelation, int> counts;
  for (const auto& edge : graph.edges()) ++counts[edge.relation];
  return counts;
}

TEST(SampleOffsetsTest, FinalGapMayBeShorter) {
  EXPECT_EQ(SampleOffsets(7.0, 5.0), (std::vector<double>{0.0, 5.0, 7.0}));
  EXPECT_EQ(SampleOffsets(10.0, 5.0), (std::vector<double>{0.0, 5.0, 10.0}));
  EXPECT_EQ(SampleOffsets(3.0, 5.0), (std::vector<double>{0.0, 3.0}));
}

TEST(BuildLaneGraphTest, StraightFixtureCounts) {
  const LaneGraph graph = StraightGraph();
  EXPECT_EQ(graph.nodes().size(), 42u);
  for (const int lane : {-1, -2}) {
    int nodes = 0;
    int successors = 0;
    for (const auto& [id, node] : graph.nodes()) {
      if (node.lane_id == lane) ++nodes;
    }
    for (const auto& edge : graph.edges()) {
      if (edge.relation == EdgeRelation::kSuccessor &&
          graph.node(edge.from).lane_id == lane) {
        ++successors;
      }
    }
    EXPECT_EQ(nodes, 21) << lane;
    EXPECT_EQ(successors, 20) << lane;
  }
  const auto counts = RelationCounts(graph);
  EXPECT_EQ(counts.at(EdgeRelation::kLeft), 20);
  EXPECT_EQ(counts.at(EdgeRelation::kRight), 20);
  for (int i = 0; i < 20; ++i) {
    EXPECT_TRUE(graph.HasOutgoing(StraightId(-1, i), EdgeRelation::kRight)) << i;
    EXPECT_TRUE(graph.HasOutgoing(StraightId(-2, i), EdgeRelation::kLeft)) << i;
  }
  EXPECT_FALSE(graph.HasOutgoing(StraightId(-1, 20), EdgeRelation::kRight));
}

TEST(BuildLaneGraphTest, NodePosesFollowLaneCentres) {
  const LaneGraph graph = StraightGraph();
  const GraphNode& node = graph.node(StraightId(-2, 3));
  EXPECT_DOUBLE_EQ(node.pose.x, 15.0);
  EXPECT_DOUBLE_EQ(node.pose.y, -5.25);
  EXPECT_DOUBLE_EQ(node.s_coord, 15.0);
  EXPECT_EQ(node.kind, NodeKind::kRoadBound);
}

TEST(BuildLaneGraphTest, SingleShortLane) {
  const std::string doc =
      R"(<OpenDRIVE><road id="s" length="7" junction="-1"><planView>)"
      R"(<geometry s="0" x="0" y="0" hdg="0" length="7"><line/></geometry>)"
      R"(</planView><lanes><laneSection s="0"><right>)"
      R"(<lane id="-1" type="driving"><width sOffset="0" a="3" b="0" c="0" d="0"/></lane>)"
      R"(</right></laneSection></lanes></road></OpenDRIVE>)";
  const LaneGraph graph = BuildLaneGraph(ParseOpenDrive(doc), "m", 5.0);
  std::vector<double> s;
  for (const auto& [id, node] : graph.nodes()) s.push_back(node.s_coord);
  std::sort(s.begin(), s.end());
  EXPECT_EQ(s, (std::vector<double>{0.0, 5.0, 7.0}));
  EXPECT_EQ(graph.edges().size(), 2u);
}

TEST(BuildLaneGraphTest, NonPositiveSpacingIsDomainError) {
  const RoadNetwork network = ParseOpenDrive(FixtureText("fixture_straight.xodr"));
  for (const double spacing : {0.0, -1.0}) {
    try {
      BuildLaneGraph(network, "m", spacing);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kDomain);
    }
    EXPECT_THROW(BuildPedestrianGraph(network, "m", spacing), Error);
  }
}

TEST(BuildLaneGraphTest, NoDrivingLanesGivesEmptyGraph) {
  const std::string doc =
      R"(<OpenDRIVE><road id="s" length="7" junction="-1"><planView>)"
      R"(<geometry s="0" x="0" y="0" hdg="0" length="7"><line/></geometry>)"
      R"(</planView></road></OpenDRIVE>)";
  const RoadNetwork network = ParseOpenDrive(doc);
  EXPECT_TRUE(BuildLaneGraph(network, "m", 5.0).empty());
  EXPECT_TRUE(BuildPedestrianGraph(network, "m", 5.0).empty());
}

TEST(BuildLaneGraphTest, EquidistanceProperty) {
  for (const char* name : {"fixture_straight.xodr", "fixture_tjunction.xodr"}) {
    for (const double spacing : {1.5, 4.0, 5.0, 7.3}) {
      const LaneGraph graph =
          BuildLaneGraph(ParseOpenDrive(FixtureText(name)), "m", spacing);
      // Group by lane, ordered by index.
      std::map<std::pair<std::string, int>, std::vector<double>> lanes;
      for (const auto& edge : graph.edges()) {
        if (edge.relation != EdgeRelation::kSuccessor) continue;
        const GraphNode& a = graph.node(edge.from);
        const GraphNode& b = graph.node(edge.to);
        if (a.road_id != b.road_id || a.lane_id != b.lane_id) continue;
        lanes[{a.road_id, a.lane_id}].push_back(std::abs(b.s_coord - a.s_coord));
      }
      for (const auto& [lane, gaps] : lanes) {
        for (std::size_t i = 0; i + 1 < gaps.size(); ++i) {
          EXPECT_LT(std::abs(gaps[i] - spacing), 1e-9);
        }
        EXPECT_GT(gaps.back(), 0.0);
        EXPECT_LE(gaps.back(), spacing + 1e-9);
      }
    }
  }
}

TEST(BuildLaneGraphTest, LateralEdgeSymmetry) {
  for (const char* name : {"fixture_straight.xodr", "fixture_tjunction.xodr"}) {
    const LaneGraph graph =
        BuildLaneGraph(ParseOpenDrive(FixtureText(name)), "m", 4.0);
    std::multiset<std::pair<std::string, std::string>> left;
    std::multiset<std::pair<std::string, std::string>> right;
    for (const auto& edge : graph.edges()) {
      if (edge.relation == EdgeRelation::kLeft) left.insert({edge.from, edge.to});
      if (edge.relation == EdgeRelation::kRight) right.insert({edge.to, edge.from});
    }
    EXPECT_EQ(left, right);
  }
}

TEST(BuildLaneGraphTest, EdgesConnectExistingNodesWithoutSelfLoops) {
  const RoadNetwork network = ParseOpenDrive(FixtureText("fixture_tjunction.xodr"));
  const LaneGraph graph = MergeGraphs(BuildLaneGraph(network, "t", 4.0),
                                      BuildPedestrianGraph(network, "t", 4.0));
  for (const auto& edge : graph.edges()) {
    ASSERT_TRUE(graph.Contains(edge.from));
    ASSERT_TRUE(graph.Contains(edge.to));
    EXPECT_NE(edge.from, edge.to);
    const bool pedestrian = edge.relation == EdgeRelation::kPedestrian;
    EXPECT_EQ(graph.node(edge.from).kind == NodeKind::kPedestrian, pedestrian);
    EXPECT_EQ(graph.node(edge.to).kind == NodeKind::kPedestrian, pedestrian);
    EXPECT_NEAR(edge.length,
                Distance(graph.node(edge.from).pose, graph.node(edge.to).pose),
                1e-12);
  }
}

TEST(BuildLaneGraphTest, JunctionBridges) {
  const LaneGraph graph = BuildLaneGraph(
      ParseOpenDrive(FixtureText("fixture_tjunction.xodr")), "t", 5.0);
  auto has_edge = [&](const std::string& from, const std::string& to) {
    for (const std::size_t i : graph.OutEdges(from)) {
      if (graph.edges()[i].to == to &&
          graph.edges()[i].relation == EdgeRelation::kSuccessor) {
        return true;
      }
    }
    return false;
  };
  // Road 1 lane -1 ends at index 12 (60 m / 5 m) and feeds roads 10 and 12.
  EXPECT_TRUE(has_edge("t:1:-1:12", "t:10:-1:0"));
  EXPECT_TRUE(has_edge("t:1:-1:12", "t:12:-1:0"));
  EXPECT_TRUE(has_edge("t:10:-1:4", "t:2:-1:0"));
  EXPECT_TRUE(has_edge("t:12:-1:4", "t:3:-1:0"));
  // Incoming lanes travelling against s start at their s = L end.
  EXPECT_TRUE(has_edge("t:2:1:12", "t:11:-1:0"));
  EXPECT_TRUE(has_edge("t:11:-1:4", "t:1:1:0"));
  EXPECT_TRUE(has_edge("t:3:1:12", "t:13:-1:0"));
  EXPECT_TRUE(has_edge("t:13:-1:4", "t:2:-1:0"));
  for (const char* from : {"t:1:-1:12", "t:10:-1:4", "t:12:-1:4"}) {
    EXPECT_LT(Distance(graph.node(from).pose,
                       graph.node(graph.edges()[graph.OutEdges(from)[0]].to).pose),
              1e-9);
  }
}

TEST(BuildPedestrianGraphTest, StraightSidewalk) {
  const LaneGraph graph = BuildPedestrianGraph(
      ParseOpenDrive(FixtureText("fixture_straight.xodr")), "fixture_straight",
      5.0);
  EXPECT_EQ(graph.nodes().size(), 21u);
  EXPECT_EQ(graph.edges().size(), 20u);
  for (const auto& edge : graph.edges()) {
    EXPECT_EQ(edge.relation, EdgeRelation::kPedestrian);
    EXPECT_FALSE(edge.directed());
  }
  EXPECT_DOUBLE_EQ(graph.node("fixture_straight:1:-3:0").pose.y, -8.0);
}

TEST(BuildPedestrianGraphTest, CrosswalkChainAttachesToBothSidewalks) {
  std::vector<std::string> warnings;
  const LaneGraph graph = BuildPedestrianGraph(
      ParseOpenDrive(FixtureText("fixture_tjunction.xodr")), "t", 5.0,
      &warnings);
  EXPECT_TRUE(warnings.empty());
  std::vector<std::string> chain;
  for (const auto& [id, node] : graph.nodes()) {
    if (node.lane_id == 0) chain.push_back(id);
  }
  ASSERT_EQ(chain.size(), 3u);
  int internal = 0;
  int attachments = 0;
  for (const auto& edge : graph.edges()) {
    const bool a = graph.node(edge.from).lane_id == 0;
    const bool b = graph.node(edge.to).lane_id == 0;
    if (a && b) ++internal;
    if (a != b) ++attachments;
  }
  EXPECT_EQ(internal, 2);
  EXPECT_EQ(attachments, 2);
  // The chain spans 8 m across road 3 at s = 5.
  const Pose& first = graph.node("t:3:cw600:0").pose;
  const Pose& last = graph.node("t:3:cw600:2").pose;
  EXPECT_NEAR(Distance(first, last), 8.0, 1e-9);
  EXPECT_NEAR(first.y, -15.0, 1e-9);
}

TEST(BuildPedestrianGraphTest, UnattachedCrosswalkWarns) {
  const std::string doc =
      R"(<OpenDRIVE><road id="s" length="20" junction="-1"><planView>)"
      R"(<geometry s="0" x="0" y="0" hdg="0" length="20"><line/></geometry>)"
      R"(</planView><objects><object type="crosswalk" id="9" s="10" t="0" hdg="1.5707963" length="6" width="2"/></objects>)"
      R"(</road></OpenDRIVE>)";
  std::vector<std::string> warnings;
  const LaneGraph graph =
      BuildPedestrianGraph(ParseOpenDrive(doc), "m", 5.0, &warnings);
  EXPECT_EQ(graph.nodes().size(), 3u);
  EXPECT_EQ(warnings.size(), 2u);
}

TEST(ReachableSetTest, StraightFixtureMatchesOracle) {
  const LaneGraph graph = StraightGraph();
  const auto reached = ReachableSet(graph, StraightId(-1, 0));
  EXPECT_EQ(reached, ReachableOracle(graph, StraightId(-1, 0)));
  EXPECT_EQ(reached.size(), 42u);
  EXPECT_EQ(ReachableSet(graph, StraightId(-2, 20)),
            std::set<std::string>{StraightId(-2, 20)});
  EXPECT_THROW(ReachableSet(graph, "nope"), Error);
}

TEST(ReachableSetTest, EveryFixtureNodeMatchesOracle) {
  for (const char* name : {"fixture_straight.xodr", "fixture_tjunction.xodr"}) {
    const RoadNetwork network = ParseOpenDrive(FixtureText(name));
    const LaneGraph graph = MergeGraphs(BuildLaneGraph(network, "m", 5.0),
                                        BuildPedestrianGraph(network, "m", 5.0));
    for (const auto& [id, node] : graph.nodes()) {
      EXPECT_EQ(ReachableSet(graph, id), ReachableOracle(graph, id)) << id;
    }
  }
}

TEST(TerminalNodesTest, StraightFixture) {
  const LaneGraph graph = StraightGraph();
  EXPECT_EQ(TerminalNodes(graph),
            (std::set<std::string>{StraightId(-1, 20), StraightId(-2, 20)}));
  EXPECT_TRUE(TerminalNodes(LaneGraph{}).empty());
  LaneGraph single("m", 1.0);
  single.AddNode({"only", {}, 0.0, "r", -1, NodeKind::kRoadBound, {}});
  EXPECT_EQ(TerminalNodes(single), std::set<std::string>{"only"});
}

TEST(TerminalNodesTest, MatchesOutDegreeScan) {
  for (const char* name : {"fixture_straight.xodr", "fixture_tjunction.xodr"}) {
    const RoadNetwork network = ParseOpenDrive(FixtureText(name));
    for (const double spacing : {2.0, 5.0, 9.0}) {
      const LaneGraph graph =
          MergeGraphs(BuildLaneGraph(network, "m", spacing),
                      BuildPedestrianGraph(network, "m", spacing));
      EXPECT_EQ(TerminalNodes(graph), OutDegreeZeroOracle(graph));
    }
  }
}

TEST(LaneGraphTest, RejectsBadEdges) {
  LaneGraph graph("m", 1.0);
  graph.AddNode({"a", {}, 0.0, "r", -1, NodeKind::kRoadBound, {}});
  graph.AddNode({"b", {}, 0.0, "r", -1, NodeKind::kRoadBound, {}});
  EXPECT_THROW(graph.AddNode({"a", {}, 0.0, "r", -1, NodeKind::kRoadBound, {}}),
               Error);
  EXPECT_THROW(graph.AddEdge({"a", "a", EdgeRelation::kSuccessor, 0.0}), Error);
  EXPECT_THROW(graph.AddEdge({"a", "c", EdgeRelation::kSuccessor, 0.0}), Error);
  graph.AddEdge({"a", "b", EdgeRelation::kSuccessor, 1.0});
  EXPECT_EQ(graph.Neighbors("a"), std::vector<std::string>{"b"});
  EXPECT_EQ(graph.Predecessors("b"), std::vector<std::string>{"a"});
  EXPECT_TRUE(graph.Neighbors("b").empty());
}

TEST(LaneGraphTest, DeterministicSerialization) {
  const RoadNetwork network = ParseOpenDrive(FixtureText("fixture_tjunction.xodr"));
  const auto build = [&] {
    return GraphToGraphml(MergeGraphs(BuildLaneGraph(network, "t", 4.0),
                                      BuildPedestrianGraph(network, "t", 4.0)));
  };
  EXPECT_EQ(build(), build());
}

}  // namespace
}  // namespace lanescape
