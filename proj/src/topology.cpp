#include "ponsim/topology.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace ponsim {

const char* to_string(NodeRole r) {
  switch (r) {
    case NodeRole::CentralOffice: return "central-office";
    case NodeRole::Level2Splitter: return "level2-splitter";
    case NodeRole::Level1Splitter: return "level1-splitter";
    case NodeRole::EdgeOltSite: return "edge-olt-site";
    case NodeRole::OnuSite: return "onu-site";
  }
  return "?";
}

const char* to_string(PortClass p) {
  switch (p) {
    case PortClass::Lower: return "lower";
    case PortClass::Trunk: return "trunk";
    case PortClass::Xlink: return "xlink";
    case PortClass::Loopback: return "loopback";
  }
  return "?";
}

namespace {

bool is_splitter(NodeRole r) {
  return r == NodeRole::Level1Splitter || r == NodeRole::Level2Splitter;
}

bool is_leaf_site(NodeRole r) {
  return r == NodeRole::OnuSite || r == NodeRole::EdgeOltSite;
}

bool disjoint(const std::set<ChannelIndex>& a, const std::set<ChannelIndex>& b) {
  for (ChannelIndex c : a)
    if (b.count(c)) return false;
  return true;
}

}  // namespace

void OdnTopology::add_node(const NodeId& id, NodeRole role) {
  if (nodes_.count(id))
    throw std::invalid_argument("duplicate node id: " + id);
  nodes_.emplace(id, Node{role, {}});
  if (role == NodeRole::Level1Splitter) rules_.emplace(id, SplitterRuleSet{});
}

const OdnTopology::Node& OdnTopology::node_at(const NodeId& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw std::invalid_argument("unknown node: " + id);
  return it->second;
}

NodeRole OdnTopology::role(const NodeId& id) const { return node_at(id).role; }

void OdnTopology::add_link(const NodeId& a, PortClass a_class, const NodeId& b,
                           PortClass b_class, double length_km) {
  const Node& na = node_at(a);
  const Node& nb = node_at(b);
  if ((a_class == PortClass::Xlink && na.role != NodeRole::Level1Splitter) ||
      (b_class == PortClass::Xlink && nb.role != NodeRole::Level1Splitter))
    throw std::invalid_argument("xlink port on non-level-1 splitter: " + a + "--" + b);
  if (length_km < 0.0) {
    if (a_class == PortClass::Xlink || b_class == PortClass::Xlink)
      length_km = defaults_.xlink_km;
    else if ((na.role == NodeRole::CentralOffice && nb.role == NodeRole::Level2Splitter) ||
             (nb.role == NodeRole::CentralOffice && na.role == NodeRole::Level2Splitter))
      length_km = defaults_.feeder_km;
    else if ((na.role == NodeRole::Level2Splitter && nb.role == NodeRole::Level1Splitter) ||
             (nb.role == NodeRole::Level2Splitter && na.role == NodeRole::Level1Splitter))
      length_km = defaults_.trunk_km;
    else if (is_leaf_site(na.role) || is_leaf_site(nb.role))
      length_km = defaults_.drop_km;
    else
      throw std::invalid_argument("no default length for link " + a + "--" + b);
  }
  std::size_t id = links_.size();
  links_.push_back(FiberLink{a, a_class, b, b_class, length_km});
  nodes_[a].link_ids.push_back(id);
  nodes_[b].link_ids.push_back(id);
}

void OdnTopology::set_splitter_rules(const NodeId& splitter, SplitterRuleSet rules) {
  if (node_at(splitter).role != NodeRole::Level1Splitter)
    throw std::invalid_argument("rule sets only apply to level-1 splitters: " + splitter);
  if (!disjoint(rules.reflect_set, rules.trunkpass_set))
    throw std::invalid_argument(
        "reflected wavelength would also escape to the trunk at " + splitter);
  // Any overlap among the three sets would duplicate light from a lower
  // ingress onto two egress fibers, breaking unique path resolution.
  if (!disjoint(rules.reflect_set, rules.xpass_set) ||
      !disjoint(rules.xpass_set, rules.trunkpass_set))
    throw std::invalid_argument("wavelength routed to two egress ports at " + splitter);
  rules_[splitter] = std::move(rules);
}

const SplitterRuleSet& OdnTopology::splitter_rules(const NodeId& splitter) const {
  if (node_at(splitter).role != NodeRole::Level1Splitter)
    throw std::invalid_argument("rule sets only apply to level-1 splitters: " + splitter);
  return rules_.at(splitter);
}

std::vector<NodeId> OdnTopology::nodes_with_role(NodeRole r) const {
  std::vector<NodeId> out;
  for (const auto& [id, n] : nodes_)
    if (n.role == r) out.push_back(id);
  std::sort(out.begin(), out.end());
  return out;
}

NodeId OdnTopology::parent_splitter(const NodeId& leaf) const {
  const Node& n = node_at(leaf);
  if (!is_leaf_site(n.role))
    throw std::invalid_argument("not a leaf site: " + leaf);
  for (std::size_t lid : n.link_ids) {
    const FiberLink& l = links_[lid];
    const NodeId& other = (l.a == leaf) ? l.b : l.a;
    if (nodes_.at(other).role == NodeRole::Level1Splitter) return other;
  }
  throw std::invalid_argument("leaf has no parent splitter: " + leaf);
}

std::vector<NodeId> OdnTopology::xlink_peers(const NodeId& splitter) const {
  const Node& n = node_at(splitter);
  PONSIM_ASSERT(n.role == NodeRole::Level1Splitter, "xlink peers of a non-splitter");
  std::vector<NodeId> peers;
  for (std::size_t lid : n.link_ids) {
    const FiberLink& l = links_[lid];
    PortClass own = (l.a == splitter) ? l.a_class : l.b_class;
    if (own == PortClass::Xlink) peers.push_back((l.a == splitter) ? l.b : l.a);
  }
  std::sort(peers.begin(), peers.end());
  return peers;
}

std::vector<std::string> OdnTopology::validate() const {
  std::vector<std::string> warnings;
  NodeId co;
  for (const auto& [id, n] : nodes_) {
    if (n.role == NodeRole::CentralOffice) {
      if (!co.empty()) throw std::invalid_argument("more than one central office");
      co = id;
    }
  }
  if (co.empty()) throw std::invalid_argument("no central office node");

  for (const auto& [id, n] : nodes_) {
    int lower = 0, trunk = 0, xlink = 0;
    for (std::size_t lid : n.link_ids) {
      const FiberLink& l = links_[lid];
      PortClass pc = (l.a == id) ? l.a_class : l.b_class;
      if (pc == PortClass::Lower) ++lower;
      if (pc == PortClass::Trunk) ++trunk;
      if (pc == PortClass::Xlink) ++xlink;
      if (is_leaf_site(n.role) && l.length_km > defaults_.drop_warn_km)
        warnings.push_back("drop to " + id + " is " + std::to_string(l.length_km) +
                           " km, past the expected bound");
    }
    switch (n.role) {
      case NodeRole::Level1Splitter:
        if (trunk != 1)
          throw std::invalid_argument("level-1 splitter " + id + " needs exactly one trunk link");
        if (lower < 1)
          throw std::invalid_argument("level-1 splitter " + id + " has no lower links");
        break;
      case NodeRole::Level2Splitter:
        if (trunk != 1)
          throw std::invalid_argument("level-2 splitter " + id + " needs exactly one trunk link");
        if (lower < 1)
          throw std::invalid_argument("level-2 splitter " + id + " has no lower links");
        break;
      case NodeRole::OnuSite:
      case NodeRole::EdgeOltSite:
        if (n.link_ids.size() != 1 ||
            nodes_.at(parent_splitter(id)).role != NodeRole::Level1Splitter)
          throw std::invalid_argument("site " + id + " needs exactly one drop to a level-1 splitter");
        break;
      case NodeRole::CentralOffice:
        if (n.link_ids.empty()) throw std::invalid_argument("central office has no links");
        break;
    }
  }

  // Without the cross-links the plant must be a tree hanging off the CO, so
  // each site has exactly one trunk route.
  std::size_t tree_edges = 0;
  for (const FiberLink& l : links_)
    if (l.a_class != PortClass::Xlink && l.b_class != PortClass::Xlink) ++tree_edges;
  std::vector<NodeId> frontier{co};
  std::set<NodeId> seen{co};
  while (!frontier.empty()) {
    NodeId cur = frontier.back();
    frontier.pop_back();
    for (std::size_t lid : nodes_.at(cur).link_ids) {
      const FiberLink& l = links_[lid];
      if (l.a_class == PortClass::Xlink || l.b_class == PortClass::Xlink) continue;
      const NodeId& other = (l.a == cur) ? l.b : l.a;
      if (seen.insert(other).second) frontier.push_back(other);
    }
  }
  if (seen.size() != nodes_.size() || tree_edges != nodes_.size() - 1)
    throw std::invalid_argument("plant is not a tree plus cross-links");
  return warnings;
}

std::set<PortClass> OdnTopology::route_wavelength(const NodeId& splitter, PortClass ingress,
                                                  ChannelIndex ch) const {
  const Node& n = node_at(splitter);
  PONSIM_ASSERT(is_splitter(n.role), "route_wavelength needs a splitter node");
  std::set<PortClass> out;
  if (n.role == NodeRole::Level2Splitter) {
    // Plain power splitter: combine upward, broadcast downward, all channels.
    if (ingress == PortClass::Lower) out.insert(PortClass::Trunk);
    if (ingress == PortClass::Trunk) out.insert(PortClass::Lower);
    return out;
  }
  const SplitterRuleSet& r = rules_.at(splitter);
  switch (ingress) {
    case PortClass::Lower:
      if (r.reflect_set.count(ch)) out.insert(PortClass::Lower);
      if (r.trunkpass_set.count(ch)) out.insert(PortClass::Trunk);
      if (r.xpass_set.count(ch)) out.insert(PortClass::Xlink);
      break;
    case PortClass::Xlink:
      if (r.xpass_set.count(ch)) out.insert(PortClass::Lower);
      break;
    case PortClass::Trunk:
      if (r.trunkpass_set.count(ch)) out.insert(PortClass::Lower);
      break;
    case PortClass::Loopback:
      break;
  }
  return out;
}

std::optional<Path> OdnTopology::try_resolve_path(const NodeId& src, const NodeId& dst,
                                                  ChannelIndex ch, EastWestMode mode) const {
  PONSIM_ASSERT(src != dst, "resolve_path needs distinct endpoints");
  node_at(dst);

  std::vector<std::vector<std::size_t>> found;
  std::vector<std::size_t> trail;
  // Depth-first over (node, incoming link); light only moves on where the
  // splitter rules allow it, so dead branches die at leaves or blocks.
  std::function<void(const NodeId&, std::size_t)> walk = [&](const NodeId& cur,
                                                             std::size_t in_link) {
    if (cur == dst) {
      found.push_back(trail);
      return;
    }
    const Node& n = nodes_.at(cur);
    if (!is_splitter(n.role)) return;
    const FiberLink& in = links_[in_link];
    PortClass ingress = (in.a == cur) ? in.a_class : in.b_class;
    std::set<PortClass> egress = route_wavelength(cur, ingress, ch);
    for (std::size_t lid : n.link_ids) {
      if (lid == in_link) continue;
      if (std::find(trail.begin(), trail.end(), lid) != trail.end()) continue;
      const FiberLink& l = links_[lid];
      PortClass pc = (l.a == cur) ? l.a_class : l.b_class;
      if (!egress.count(pc)) continue;
      trail.push_back(lid);
      walk((l.a == cur) ? l.b : l.a, lid);
      trail.pop_back();
    }
  };
  for (std::size_t lid : node_at(src).link_ids) {
    const FiberLink& l = links_[lid];
    trail.push_back(lid);
    walk((l.a == src) ? l.b : l.a, lid);
    trail.pop_back();
  }

  if (found.empty()) return std::nullopt;
  PONSIM_ASSERT(found.size() == 1, "wavelength reaches the destination on two paths");

  // Locate a splitter's trunk link for overlay rerouting.
  auto trunk_link = [&](const NodeId& l1) -> const FiberLink& {
    for (std::size_t lid : nodes_.at(l1).link_ids) {
      const FiberLink& l = links_[lid];
      PortClass pc = (l.a == l1) ? l.a_class : l.b_class;
      if (pc == PortClass::Trunk) return l;
    }
    throw std::logic_error("splitter without trunk link: " + l1);
  };

  Path path;
  NodeId at = src;
  for (std::size_t lid : found.front()) {
    const FiberLink& l = links_[lid];
    NodeId next = (l.a == at) ? l.b : l.a;
    bool is_xlink = l.a_class == PortClass::Xlink || l.b_class == PortClass::Xlink;
    if (is_xlink && mode == EastWestMode::Overlay) {
      const FiberLink& up = trunk_link(at);
      const FiberLink& down = trunk_link(next);
      NodeId mid_a = (up.a == at) ? up.b : up.a;
      NodeId mid_b = (down.a == next) ? down.b : down.a;
      PONSIM_ASSERT(mid_a == mid_b, "overlay cross-link spans two level-2 splitters");
      path.hops.push_back({at, mid_a, up.length_km});
      path.hops.push_back({mid_a, next, down.length_km});
    } else {
      path.hops.push_back({at, next, l.length_km});
    }
    at = next;
  }
  for (const PathHop& h : path.hops) path.total_length_km += h.length_km;
  return path;
}

Path OdnTopology::resolve_path(const NodeId& src, const NodeId& dst, ChannelIndex ch,
                               EastWestMode mode) const {
  auto p = try_resolve_path(src, dst, ch, mode);
  if (!p)
    throw std::runtime_error("channel " + std::to_string(ch) + " is blocked between " + src +
                             " and " + dst);
  return *p;
}

double OdnTopology::propagation_delay_us(const Path& p) const {
  return p.total_length_km * defaults_.us_per_km;
}

SimTime OdnTopology::propagation_delay(const Path& p) const {
  return static_cast<SimTime>(std::llround(propagation_delay_us(p) * 1000.0));
}

}  // namespace ponsim
