#include "agentflow/graph.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <unordered_map>

#include "agentflow/text.hpp"

namespace agentflow {

std::string_view to_string(NodeKind kind) {
  return kind == NodeKind::Basic ? "Basic" : "Tool";
}

std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Sequential: return "Sequential";
    case EdgeKind::ConditionalBranch: return "ConditionalBranch";
    case EdgeKind::LoopBack: return "LoopBack";
    case EdgeKind::ParallelFanOut: return "ParallelFanOut";
    case EdgeKind::ParallelFanIn: return "ParallelFanIn";
  }
  return "?";
}

std::optional<NodeKind> parse_node_kind(std::string_view s) {
  if (s == "Basic") return NodeKind::Basic;
  if (s == "Tool") return NodeKind::Tool;
  return std::nullopt;
}

std::optional<EdgeKind> parse_edge_kind(std::string_view s) {
  for (auto k : {EdgeKind::Sequential, EdgeKind::ConditionalBranch, EdgeKind::LoopBack,
                 EdgeKind::ParallelFanOut, EdgeKind::ParallelFanIn}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

NodeSpec NodeSpec::basic(std::string id, std::string name, std::string description,
                         std::string system_prompt, std::string human_prompt) {
  NodeSpec n;
  n.node_id = std::move(id);
  n.kind = NodeKind::Basic;
  n.node_name = std::move(name);
  n.description = std::move(description);
  n.system_prompt = std::move(system_prompt);
  n.human_prompt = std::move(human_prompt);
  return n;
}

NodeSpec NodeSpec::tool(std::string id, std::string name, std::string description,
                        std::string tool_name, nlohmann::json params) {
  NodeSpec n;
  n.node_id = std::move(id);
  n.kind = NodeKind::Tool;
  n.node_name = std::move(name);
  n.description = std::move(description);
  n.tool_name = std::move(tool_name);
  n.tool_params = std::move(params);
  return n;
}

std::vector<std::string> node_spec_problems(const NodeSpec& spec) {
  std::vector<std::string> problems;
  auto blank = [](const std::string& s) { return text::trim(s).empty(); };
  if (blank(spec.node_id)) problems.push_back("node_id is empty");
  if (blank(spec.node_name)) problems.push_back("node_name is empty");
  if (blank(spec.description)) problems.push_back("description is empty");
  const bool has_params = !(spec.tool_params.is_null() ||
                            (spec.tool_params.is_object() && spec.tool_params.empty()));
  if (spec.kind == NodeKind::Basic) {
    if (blank(spec.system_prompt)) problems.push_back("basic node has empty system_prompt");
    if (blank(spec.human_prompt)) problems.push_back("basic node has empty human_prompt");
    if (!spec.tool_name.empty() || has_params)
      problems.push_back("basic node must not carry tool fields");
  } else {
    if (blank(spec.tool_name)) problems.push_back("tool node has empty tool_name");
    if (!spec.system_prompt.empty() || !spec.human_prompt.empty())
      problems.push_back("tool node must not carry prompt fields");
    if (!spec.tool_params.is_null() && !spec.tool_params.is_object())
      problems.push_back("tool_params must be an object");
  }
  return problems;
}

EdgeSpec EdgeSpec::sequential(std::string source, std::string target) {
  return EdgeSpec{std::move(source), std::move(target), EdgeKind::Sequential, {}, {}, {}};
}

EdgeSpec EdgeSpec::branch(std::string source, std::string target, std::string label,
                          std::string condition) {
  return EdgeSpec{std::move(source), std::move(target), EdgeKind::ConditionalBranch,
                  std::move(condition), std::move(label), {}};
}

EdgeSpec EdgeSpec::loop_back(std::string source, std::string target, std::string exit_condition,
                             int max_iterations) {
  return EdgeSpec{std::move(source), std::move(target), EdgeKind::LoopBack,
                  std::move(exit_condition), {}, max_iterations};
}

EdgeSpec EdgeSpec::fan_out(std::string source, std::string target) {
  return EdgeSpec{std::move(source), std::move(target), EdgeKind::ParallelFanOut, {}, {}, {}};
}

EdgeSpec EdgeSpec::fan_in(std::string source, std::string target) {
  return EdgeSpec{std::move(source), std::move(target), EdgeKind::ParallelFanIn, {}, {}, {}};
}

const NodeSpec* WorkflowGraph::find_node(std::string_view id) const {
  for (const auto& n : nodes)
    if (n.node_id == id) return &n;
  return nullptr;
}

std::optional<size_t> WorkflowGraph::node_index(std::string_view id) const {
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].node_id == id) return i;
  return std::nullopt;
}

const EdgeSpec* WorkflowGraph::find_edge(std::string_view source, std::string_view target) const {
  for (const auto& e : edges)
    if (e.source == source && e.target == target) return &e;
  return nullptr;
}

std::vector<const EdgeSpec*> WorkflowGraph::outgoing(std::string_view id) const {
  std::vector<const EdgeSpec*> out;
  for (const auto& e : edges)
    if (e.source == id) out.push_back(&e);
  return out;
}

std::vector<const EdgeSpec*> WorkflowGraph::incoming(std::string_view id) const {
  std::vector<const EdgeSpec*> out;
  for (const auto& e : edges)
    if (e.target == id) out.push_back(&e);
  return out;
}

bool ValidationReport::has(std::string_view rule_id) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.rule_id == rule_id; });
}

std::vector<std::string> ValidationReport::rule_ids() const {
  std::vector<std::string> ids;
  for (const auto& v : violations)
    if (std::find(ids.begin(), ids.end(), v.rule_id) == ids.end()) ids.push_back(v.rule_id);
  return ids;
}

std::string ValidationReport::summary() const {
  if (ok()) return "ok";
  std::vector<std::string> lines;
  for (const auto& v : violations) lines.push_back(v.rule_id + ": " + v.message);
  return text::join(lines, "; ");
}

std::vector<std::string> template_placeholders(std::string_view tmpl) {
  std::vector<std::string> names;
  size_t pos = 0;
  while ((pos = tmpl.find("{{", pos)) != std::string_view::npos) {
    size_t end = tmpl.find("}}", pos + 2);
    if (end == std::string_view::npos) break;
    std::string name = text::trim(tmpl.substr(pos + 2, end - pos - 2));
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    pos = end + 2;
  }
  return names;
}

namespace {

std::string arc(const EdgeSpec& e) { return e.source + "->" + e.target; }

// Index-based view of the resolvable part of a graph.
struct Topology {
  size_t n = 0;
  std::vector<const EdgeSpec*> edges;  // only edges whose endpoints resolve
  std::vector<size_t> src, dst;
  std::vector<std::vector<size_t>> out_edges, in_edges;  // edge indices per node

  bool forward(size_t e) const { return edges[e]->is_forward(); }
};

Topology build_topology(const WorkflowGraph& g, const std::unordered_map<std::string, size_t>& index) {
  Topology t;
  t.n = g.nodes.size();
  t.out_edges.resize(t.n);
  t.in_edges.resize(t.n);
  for (const auto& e : g.edges) {
    auto s = index.find(e.source);
    auto d = index.find(e.target);
    if (s == index.end() || d == index.end()) continue;
    size_t k = t.edges.size();
    t.edges.push_back(&e);
    t.src.push_back(s->second);
    t.dst.push_back(d->second);
    t.out_edges[s->second].push_back(k);
    t.in_edges[d->second].push_back(k);
  }
  return t;
}

std::vector<bool> reach(const Topology& t, size_t start, bool reverse, bool forward_only) {
  std::vector<bool> seen(t.n, false);
  std::vector<size_t> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    size_t v = stack.back();
    stack.pop_back();
    const auto& adj = reverse ? t.in_edges[v] : t.out_edges[v];
    for (size_t e : adj) {
      if (forward_only && !t.forward(e)) continue;
      size_t w = reverse ? t.src[e] : t.dst[e];
      if (!seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
    }
  }
  return seen;
}

// Tarjan SCC over forward edges; returns components that contain a cycle.
std::vector<std::vector<size_t>> forward_cycles(const Topology& t) {
  std::vector<int> idx(t.n, -1), low(t.n, 0);
  std::vector<bool> on_stack(t.n, false);
  std::vector<size_t> stack;
  std::vector<std::vector<size_t>> cyclic;
  int counter = 0;

  std::function<void(size_t)> strong = [&](size_t v) {
    idx[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (size_t e : t.out_edges[v]) {
      if (!t.forward(e)) continue;
      size_t w = t.dst[e];
      if (idx[w] < 0) {
        strong(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], idx[w]);
      }
    }
    if (low[v] == idx[v]) {
      std::vector<size_t> comp;
      size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp.push_back(w);
      } while (w != v);
      bool self_loop = false;
      for (size_t e : t.out_edges[v])
        if (t.forward(e) && t.dst[e] == v) self_loop = true;
      if (comp.size() > 1 || self_loop) {
        std::sort(comp.begin(), comp.end());
        cyclic.push_back(std::move(comp));
      }
    }
  };
  for (size_t v = 0; v < t.n; ++v)
    if (idx[v] < 0) strong(v);
  std::sort(cyclic.begin(), cyclic.end());
  return cyclic;
}

// Looks for a simple cycle through LoopBack edge `lb` that uses a second
// LoopBack edge. Returns nullopt when the search budget runs out.
std::optional<bool> cycle_with_two_loopbacks(const Topology& t, size_t lb, long& budget) {
  const size_t u = t.src[lb];
  const size_t v = t.dst[lb];
  if (u == v) return false;
  const auto can_reach_u = reach(t, u, /*reverse=*/true, /*forward_only=*/false);
  std::vector<bool> on_path(t.n, false);
  on_path[v] = true;

  std::function<std::optional<bool>(size_t, bool)> dfs = [&](size_t x,
                                                             bool used_lb) -> std::optional<bool> {
    if (--budget < 0) return std::nullopt;
    for (size_t e : t.out_edges[x]) {
      size_t y = t.dst[e];
      bool lb_here = !t.forward(e);
      if (y == u) {
        if (used_lb || lb_here) return true;
        continue;
      }
      if (on_path[y] || !can_reach_u[y]) continue;
      on_path[y] = true;
      auto r = dfs(y, used_lb || lb_here);
      on_path[y] = false;
      if (!r.has_value() || *r) return r;
    }
    return false;
  };
  if (v == u) return false;
  return dfs(v, false);
}

bool is_reserved_key(std::string_view name) {
  return std::find(kReservedContextKeys.begin(), kReservedContextKeys.end(), name) !=
         kReservedContextKeys.end();
}

}  // namespace

ValidationReport validate_graph(const WorkflowGraph& g) {
  ValidationReport report;
  auto add = [&](std::string_view rule, std::string msg, std::vector<std::string> elems) {
    report.violations.push_back(Violation{std::string(rule), std::move(msg), std::move(elems)});
  };

  // Nodes.
  std::unordered_map<std::string, size_t> index;
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& n = g.nodes[i];
    if (!index.emplace(n.node_id, i).second)
      add(rules::kDuplicateNodeId, "node id '" + n.node_id + "' is used more than once",
          {n.node_id});
    for (const auto& p : node_spec_problems(n))
      add(rules::kInvalidNode, "node '" + n.node_id + "': " + p, {n.node_id});
  }
  const bool has_entry = index.count(g.entry_node) > 0;
  const bool has_output = index.count(g.output_node) > 0;
  if (!has_entry)
    add(rules::kUnknownNodeRef, "entry node '" + g.entry_node + "' does not exist", {g.entry_node});
  if (!has_output)
    add(rules::kUnknownNodeRef, "output node '" + g.output_node + "' does not exist",
        {g.output_node});

  // Edge attributes and endpoint resolution.
  std::map<std::pair<std::string, std::string>, int> pair_count;
  for (const auto& e : g.edges) {
    for (const auto* end : {&e.source, &e.target})
      if (!index.count(*end))
        add(rules::kUnknownNodeRef, "edge " + arc(e) + " references unknown node '" + *end + "'",
            {arc(e)});
    ++pair_count[{e.source, e.target}];
    switch (e.kind) {
      case EdgeKind::ConditionalBranch:
        if (text::trim(e.branch_label).empty() || text::trim(e.condition).empty())
          add(rules::kInvalidEdge, "conditional edge " + arc(e) + " needs a label and a condition",
              {arc(e)});
        break;
      case EdgeKind::LoopBack:
        if (text::trim(e.condition).empty())
          add(rules::kLoopMissingExitCondition, "loop edge " + arc(e) + " has no exit condition",
              {arc(e)});
        if (!e.max_iterations || *e.max_iterations < 1)
          add(rules::kLoopUnbounded, "loop edge " + arc(e) + " needs max_iterations >= 1",
              {arc(e)});
        break;
      default:
        if (!e.condition.empty() || !e.branch_label.empty())
          add(rules::kInvalidEdge,
              std::string(to_string(e.kind)) + " edge " + arc(e) + " must not carry a condition",
              {arc(e)});
        break;
    }
    if (e.kind != EdgeKind::LoopBack && e.max_iterations)
      add(rules::kInvalidEdge, "max_iterations is only valid on LoopBack edges", {arc(e)});
  }
  for (const auto& [key, count] : pair_count)
    if (count > 1)
      add(rules::kDuplicateEdge,
          "nodes " + key.first + " and " + key.second + " are already connected in that direction",
          {key.first + "->" + key.second});

  const Topology t = build_topology(g, index);
  const auto id_of = [&](size_t i) { return g.nodes[i].node_id; };

  if (has_entry) {
    size_t entry = index.at(g.entry_node);
    for (size_t e : t.in_edges[entry])
      if (t.forward(e))
        add(rules::kEntryHasIncoming,
            "entry node has incoming " + std::string(to_string(t.edges[e]->kind)) + " edge",
            {arc(*t.edges[e])});
    auto seen = reach(t, entry, false, false);
    for (size_t i = 0; i < t.n; ++i)
      if (!seen[i])
        add(rules::kUnreachableNode, "node '" + id_of(i) + "' is not reachable from the entry",
            {id_of(i)});
  }
  if (has_output) {
    auto seen = reach(t, index.at(g.output_node), true, false);
    for (size_t i = 0; i < t.n; ++i)
      if (!seen[i])
        add(rules::kOutputUnreachable, "output node is not reachable from '" + id_of(i) + "'",
            {id_of(i)});
  }

  // Cycles: forward edges must form a DAG; every LoopBack must close a
  // forward path and no cycle may pass through two of them.
  const auto cycles = forward_cycles(t);
  for (const auto& comp : cycles) {
    std::vector<std::string> ids;
    for (size_t i : comp) ids.push_back(id_of(i));
    add(rules::kCycleWithoutExit, "cycle without a LoopBack edge through " + text::join(ids, ", "),
        ids);
  }
  std::vector<int> loopbacks_from(t.n, 0);
  bool all_backward = true;
  for (size_t e = 0; e < t.edges.size(); ++e) {
    if (t.forward(e)) continue;
    ++loopbacks_from[t.src[e]];
    if (t.src[e] == t.dst[e]) continue;
    auto from_target = reach(t, t.dst[e], false, true);
    if (!from_target[t.src[e]]) {
      all_backward = false;
      add(rules::kLoopBackNotBackward,
          "loop edge " + arc(*t.edges[e]) + " does not close a forward path",
          {arc(*t.edges[e])});
    }
  }
  for (size_t i = 0; i < t.n; ++i)
    if (loopbacks_from[i] > 1)
      add(rules::kMultipleLoopBacksFromNode, "node '" + id_of(i) + "' has several loop edges",
          {id_of(i)});
  if (cycles.empty() && all_backward) {
    long budget = 200000;
    for (size_t e = 0; e < t.edges.size(); ++e) {
      if (t.forward(e)) continue;
      auto found = cycle_with_two_loopbacks(t, e, budget);
      if (!found) {
        add(rules::kCycleAnalysisLimit, "cycle analysis exceeded its search budget", {});
        break;
      }
      if (*found)
        add(rules::kMultipleLoopBacksInCycle,
            "a cycle through " + arc(*t.edges[e]) + " passes more than one loop edge",
            {arc(*t.edges[e])});
    }
  }

  // Outgoing shape and conditional blocks.
  for (size_t i = 0; i < t.n; ++i) {
    std::map<EdgeKind, int> kinds;
    std::vector<const EdgeSpec*> branches;
    for (size_t e : t.out_edges[i]) {
      if (!t.forward(e)) continue;
      ++kinds[t.edges[e]->kind];
      if (t.edges[e]->kind == EdgeKind::ConditionalBranch) branches.push_back(t.edges[e]);
    }
    if (kinds.size() > 1 || kinds[EdgeKind::Sequential] > 1 || kinds[EdgeKind::ParallelFanIn] > 1)
      add(rules::kMixedOutgoing, "node '" + id_of(i) + "' has conflicting outgoing edges",
          {id_of(i)});
    if (branches.empty()) continue;
    std::set<std::string> labels;
    bool has_default = false;
    for (const auto* b : branches) {
      if (!labels.insert(b->branch_label).second)
        add(rules::kConditionalDuplicateLabel,
            "node '" + id_of(i) + "' has two branches labelled '" + b->branch_label + "'",
            {arc(*b)});
      if (b->branch_label == kDefaultBranch) has_default = true;
      if (b->condition != branches.front()->condition)
        add(rules::kInvalidEdge, "branches leaving '" + id_of(i) + "' disagree on the condition",
            {arc(*b)});
    }
    if (!has_default)
      add(rules::kConditionalMissingDefault,
          "conditional block at '" + id_of(i) + "' has no default branch", {id_of(i)});
  }

  // Parallel blocks: each fan-out arm is a chain of single-entry,
  // single-exit nodes ending in a FanIn edge; all arms of one source share
  // the fusion node, and the fusion node is fed by nothing else.
  std::set<size_t> arm_tails;
  for (size_t s = 0; s < t.n; ++s) {
    std::optional<size_t> fusion;
    std::set<size_t> tails;
    bool has_fan_out = false;
    for (size_t e : t.out_edges[s]) {
      if (t.edges[e]->kind != EdgeKind::ParallelFanOut) continue;
      has_fan_out = true;
      size_t x = t.dst[e];
      std::set<size_t> visited;
      while (true) {
        if (!visited.insert(x).second) break;
        const auto& ins = t.in_edges[x];
        const auto& outs = t.out_edges[x];
        if (ins.size() != 1) {
          add(rules::kParallelUnmatched,
              "parallel arm node '" + id_of(x) + "' must have exactly one incoming edge",
              {id_of(x)});
          break;
        }
        if (outs.size() != 1) {
          add(rules::kParallelUnmatched,
              "parallel arm node '" + id_of(x) + "' must have exactly one outgoing edge",
              {id_of(x)});
          break;
        }
        const EdgeSpec* next = t.edges[outs.front()];
        if (next->kind == EdgeKind::Sequential) {
          x = t.dst[outs.front()];
          continue;
        }
        if (next->kind != EdgeKind::ParallelFanIn) {
          add(rules::kParallelUnmatched,
              "parallel arm starting at '" + t.edges[e]->target + "' does not fan in",
              {t.edges[e]->target});
          break;
        }
        size_t f = t.dst[outs.front()];
        if (fusion && *fusion != f)
          add(rules::kParallelUnmatched,
              "arms of '" + id_of(s) + "' converge on different fusion nodes",
              {id_of(s), id_of(*fusion), id_of(f)});
        fusion = f;
        tails.insert(x);
        arm_tails.insert(x);
        break;
      }
    }
    if (has_fan_out && fusion) {
      for (size_t e : t.in_edges[*fusion]) {
        if (!t.forward(e)) continue;
        if (t.edges[e]->kind != EdgeKind::ParallelFanIn || !tails.count(t.src[e]))
          add(rules::kParallelUnmatched,
              "fusion node '" + id_of(*fusion) + "' has an input that is not an arm of '" +
                  id_of(s) + "'",
              {arc(*t.edges[e])});
      }
    }
  }
  for (size_t e = 0; e < t.edges.size(); ++e)
    if (t.edges[e]->kind == EdgeKind::ParallelFanIn && !arm_tails.count(t.src[e]))
      add(rules::kParallelUnmatched,
          "fan-in edge " + arc(*t.edges[e]) + " does not close a parallel arm",
          {arc(*t.edges[e])});

  // Prompt placeholders must name something the executor can provide.
  for (const auto& n : g.nodes) {
    if (n.kind != NodeKind::Basic) continue;
    for (const auto* tmpl : {&n.system_prompt, &n.human_prompt})
      for (const auto& name : template_placeholders(*tmpl))
        if (!is_reserved_key(name) && !index.count(name))
          add(rules::kUnknownPlaceholder,
              "node '" + n.node_id + "' references unknown placeholder '" + name + "'",
              {n.node_id});
  }
  return report;
}

GraphEditor::GraphEditor(WorkflowGraph base) : graph_(std::move(base)) {}

void GraphEditor::insert_node(NodeSpec spec) {
  auto problems = node_spec_problems(spec);
  if (!problems.empty())
    throw GraphError(ErrorCode::InvalidNodeSpec,
                     "invalid node '" + spec.node_id + "': " + text::join(problems, "; "));
  if (graph_.has_node(spec.node_id))
    throw GraphError(ErrorCode::DuplicateNodeId, "node id '" + spec.node_id + "' already exists");
  if (spec.kind == NodeKind::Tool && spec.tool_params.is_null())
    spec.tool_params = nlohmann::json::object();
  graph_.nodes.push_back(std::move(spec));
}

void GraphEditor::erase_node(std::string_view id) {
  auto& nodes = graph_.nodes;
  nodes.erase(std::remove_if(nodes.begin(), nodes.end(),
                             [&](const NodeSpec& n) { return n.node_id == id; }),
              nodes.end());
  auto& edges = graph_.edges;
  edges.erase(std::remove_if(edges.begin(), edges.end(),
                             [&](const EdgeSpec& e) { return e.source == id || e.target == id; }),
              edges.end());
}

void GraphEditor::connect(EdgeSpec edge) {
  for (const auto* end : {&edge.source, &edge.target})
    if (!graph_.has_node(*end))
      throw GraphError(ErrorCode::UnknownNode, "unknown node '" + *end + "'");
  graph_.edges.push_back(std::move(edge));
}

bool GraphEditor::disconnect(std::string_view source, std::string_view target) {
  auto& edges = graph_.edges;
  auto it = std::find_if(edges.begin(), edges.end(), [&](const EdgeSpec& e) {
    return e.source == source && e.target == target;
  });
  if (it == edges.end()) return false;
  edges.erase(it);
  return true;
}

NodeSpec& GraphEditor::node(std::string_view id) {
  for (auto& n : graph_.nodes)
    if (n.node_id == id) return n;
  throw GraphError(ErrorCode::NodeNotFound, "node '" + std::string(id) + "' not found");
}

void GraphEditor::move_outgoing(std::string_view from, std::string_view to) {
  for (auto& e : graph_.edges)
    if (e.source == from) e.source = std::string(to);
}

void GraphEditor::move_incoming_forward(std::string_view from, std::string_view to) {
  for (auto& e : graph_.edges)
    if (e.target == from && e.is_forward()) e.target = std::string(to);
}

std::string GraphEditor::fresh_id(std::string_view base) const {
  std::string id(base);
  for (int i = 2; graph_.has_node(id); ++i) id = std::string(base) + "_" + std::to_string(i);
  return id;
}

WorkflowGraph GraphEditor::commit(ErrorCode fallback) const {
  auto report = validate_graph(graph_);
  if (!report.ok()) {
    ErrorCode code = fallback;
    if (report.has(rules::kDuplicateEdge))
      code = ErrorCode::DuplicateEdge;
    else if (report.has(rules::kCycleWithoutExit))
      code = ErrorCode::CycleWithoutLoopBack;
    throw GraphError(code, "graph validation failed: " + report.summary(), std::move(report));
  }
  WorkflowGraph out = graph_;
  ++out.version;
  return out;
}

namespace {

void require_node(const WorkflowGraph& g, std::string_view id) {
  if (!g.has_node(id))
    throw GraphError(ErrorCode::NodeNotFound, "node '" + std::string(id) + "' not found");
}

ErrorCode reachability_code(const GraphError& err, ErrorCode otherwise) {
  const auto& r = err.report();
  if (r.has(rules::kUnreachableNode) || r.has(rules::kOutputUnreachable))
    return ErrorCode::WouldDisconnect;
  return otherwise;
}

}  // namespace

WorkflowGraph add_node(const WorkflowGraph& graph, NodeSpec spec, const Placement& placement) {
  require_node(graph, placement.anchor);
  GraphEditor ed(graph);
  const std::string id = spec.node_id;
  ed.insert_node(std::move(spec));
  if (placement.side == Placement::Side::After) {
    ed.move_outgoing(placement.anchor, id);
    ed.connect(EdgeSpec::sequential(placement.anchor, id));
    if (graph.output_node == placement.anchor) ed.set_output(id);
  } else {
    ed.move_incoming_forward(placement.anchor, id);
    ed.connect(EdgeSpec::sequential(id, placement.anchor));
    if (graph.entry_node == placement.anchor) ed.set_entry(id);
  }
  return ed.commit();
}

WorkflowGraph remove_node(const WorkflowGraph& graph, std::string_view node_id) {
  require_node(graph, node_id);
  if (node_id == graph.entry_node || node_id == graph.output_node)
    throw GraphError(ErrorCode::ProtectedNode,
                     "node '" + std::string(node_id) + "' is the entry or output node");

  std::optional<std::string> successor;
  int sequential_out = 0;
  for (const auto* e : graph.outgoing(node_id)) {
    if (e->kind == EdgeKind::Sequential && e->target != node_id) {
      ++sequential_out;
      successor = e->target;
    }
  }
  if (sequential_out != 1) successor.reset();

  GraphEditor ed(graph);
  std::vector<EdgeSpec> spliced;
  if (successor) {
    for (const auto* e : graph.incoming(node_id)) {
      if (e->source == node_id) continue;
      EdgeSpec moved = *e;
      moved.target = *successor;
      if (moved.source == moved.target && moved.is_forward()) continue;
      spliced.push_back(std::move(moved));
    }
  }
  ed.erase_node(node_id);
  for (auto& e : spliced) {
    if (ed.view().find_edge(e.source, e.target)) continue;
    ed.connect(std::move(e));
  }
  try {
    return ed.commit();
  } catch (const GraphError& err) {
    throw GraphError(reachability_code(err, ErrorCode::ValidationRejected),
                     "removing '" + std::string(node_id) + "' breaks the workflow: " +
                         err.report().summary(),
                     err.report());
  }
}

WorkflowGraph add_edge(const WorkflowGraph& graph, EdgeSpec edge) {
  for (const auto* end : {&edge.source, &edge.target})
    if (!graph.has_node(*end)) throw GraphError(ErrorCode::UnknownNode, "unknown node '" + *end + "'");
  if (graph.find_edge(edge.source, edge.target)) {
    ValidationReport r;
    r.violations.push_back(Violation{std::string(rules::kDuplicateEdge),
                                     "nodes are already connected in that direction",
                                     {edge.source + "->" + edge.target}});
    throw GraphError(ErrorCode::DuplicateEdge,
                     "edge " + edge.source + "->" + edge.target + " already exists", std::move(r));
  }
  GraphEditor ed(graph);
  ed.connect(std::move(edge));
  return ed.commit();
}

WorkflowGraph remove_edge(const WorkflowGraph& graph, std::string_view source,
                          std::string_view target) {
  GraphEditor ed(graph);
  if (!ed.disconnect(source, target))
    throw GraphError(ErrorCode::InvalidArgument,
                     "no edge " + std::string(source) + "->" + std::string(target));
  try {
    return ed.commit();
  } catch (const GraphError& err) {
    throw GraphError(reachability_code(err, err.code()), err.what(), err.report());
  }
}

GraphStats graph_stats(const WorkflowGraph& graph) {
  GraphStats s;
  s.node_count = static_cast<int>(graph.nodes.size());
  std::set<std::string> branch_sources, fan_sources;
  for (const auto& e : graph.edges) {
    if (e.kind == EdgeKind::ConditionalBranch) branch_sources.insert(e.source);
    if (e.kind == EdgeKind::ParallelFanOut) fan_sources.insert(e.source);
    if (e.kind == EdgeKind::LoopBack) ++s.loop_count;
  }
  s.branch_count = static_cast<int>(branch_sources.size());
  s.parallel_block_count = static_cast<int>(fan_sources.size());
  return s;
}

WorkflowGraph make_baseline_graph(std::string graph_id) {
  WorkflowGraph g;
  g.graph_id = std::move(graph_id);
  g.version = 0;
  g.nodes.push_back(NodeSpec::basic(
      "diagnoser", "Diagnoser", "Looks at the case image and returns a ranked differential.",
      "You are a dermatologist making a diagnosis from a clinical photograph.",
      "Image: {{image_ref}}\n"
      "Candidate diagnoses: {{labels}}\n"
      "Return the five most likely diagnoses from the candidate list as a numbered list, "
      "most likely first."));
  g.entry_node = "diagnoser";
  g.output_node = "diagnoser";
  return g;
}

}  // namespace agentflow
