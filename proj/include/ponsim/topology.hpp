#pragma once

#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "ponsim/time.hpp"

namespace ponsim {

using NodeId = std::string;
using ChannelIndex = int;  // one logical channel = co-routed up/down pair

enum class NodeRole { CentralOffice, Level2Splitter, Level1Splitter, EdgeOltSite, OnuSite };
enum class PortClass { Lower, Trunk, Xlink, Loopback };
enum class EastWestMode { Direct, Overlay };

const char* to_string(NodeRole r);
const char* to_string(PortClass p);

struct FiberLink {
  NodeId a;
  PortClass a_class;
  NodeId b;
  PortClass b_class;
  double length_km = 0.0;
};

// Per level-1 splitter wavelength routing, mirroring the three filter blocks:
// a loopback reflector on the splitter body plus pass filters on the trunk and
// cross-link fibers. Sets hold channel indices and are controller-mutable.
struct SplitterRuleSet {
  std::set<ChannelIndex> reflect_set;    // looped back to all lower ports
  std::set<ChannelIndex> xpass_set;      // passes between xlink and body
  std::set<ChannelIndex> trunkpass_set;  // passes between trunk and body
};

struct PathHop {
  NodeId from;
  NodeId to;
  double length_km = 0.0;
};

struct Path {
  std::vector<PathHop> hops;
  double total_length_km = 0.0;
};

class OdnTopology {
 public:
  // Distance defaults applied when a link is added with a negative length.
  struct Defaults {
    double feeder_km = 40.0;      // CO to level-2 splitter
    double trunk_km = 10.0;       // level-2 to level-1 splitter
    double drop_km = 0.3;         // level-1 splitter to ONU / edge OLT site
    double xlink_km = 1.0;        // direct level-1 to level-1 cable
    double drop_warn_km = 0.5;    // drops past this produce a validation warning
    double us_per_km = 5.0;       // propagation constant
  };

  OdnTopology() = default;
  explicit OdnTopology(Defaults d) : defaults_(d) {}

  void add_node(const NodeId& id, NodeRole role);
  // length_km < 0 selects the role-appropriate default for the link kind.
  void add_link(const NodeId& a, PortClass a_class, const NodeId& b, PortClass b_class,
                double length_km = -1.0);
  void set_splitter_rules(const NodeId& splitter, SplitterRuleSet rules);
  void set_east_west_mode(EastWestMode m) { mode_ = m; }

  // Structural checks; throws std::invalid_argument on hard errors and
  // returns human-readable warnings for accepted-but-odd configurations.
  std::vector<std::string> validate() const;

  NodeRole role(const NodeId& id) const;
  bool has_node(const NodeId& id) const { return nodes_.count(id) > 0; }
  const SplitterRuleSet& splitter_rules(const NodeId& splitter) const;
  EastWestMode east_west_mode() const { return mode_; }
  const Defaults& defaults() const { return defaults_; }
  std::vector<NodeId> nodes_with_role(NodeRole r) const;
  // The level-1 splitter a leaf site hangs off.
  NodeId parent_splitter(const NodeId& leaf) const;
  // Level-1 splitters wired to this one by a cross-link, sorted by id.
  std::vector<NodeId> xlink_peers(const NodeId& splitter) const;

  // Egress port classes for light of channel ch entering a splitter through
  // ingress. Level-2 splitters are wavelength-agnostic power splitters;
  // level-1 splitters consult their rule sets. Empty set = blocked.
  std::set<PortClass> route_wavelength(const NodeId& splitter, PortClass ingress,
                                       ChannelIndex ch) const;

  // Unique rule-consistent path; throws std::runtime_error when the channel
  // is blocked between the endpoints. Overlay mode reroutes each cross-link
  // hop through the level-2 splitter without touching level-1 rule checks.
  Path resolve_path(const NodeId& src, const NodeId& dst, ChannelIndex ch,
                    EastWestMode mode) const;
  Path resolve_path(const NodeId& src, const NodeId& dst, ChannelIndex ch) const {
    return resolve_path(src, dst, ch, mode_);
  }
  std::optional<Path> try_resolve_path(const NodeId& src, const NodeId& dst,
                                       ChannelIndex ch, EastWestMode mode) const;

  SimTime propagation_delay(const Path& p) const;
  double propagation_delay_us(const Path& p) const;

 private:
  struct Node {
    NodeRole role;
    std::vector<std::size_t> link_ids;
  };

  double default_length(PortClass a_class, NodeRole a_role, NodeRole b_role) const;
  const Node& node_at(const NodeId& id) const;

  Defaults defaults_;
  EastWestMode mode_ = EastWestMode::Direct;
  std::unordered_map<NodeId, Node> nodes_;
  std::vector<FiberLink> links_;
  std::unordered_map<NodeId, SplitterRuleSet> rules_;
};

}  // namespace ponsim
