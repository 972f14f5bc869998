#include "modeller/persist.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace modeller {

using nlohmann::json;

namespace {

json header(const char* format) { return json{{"format", format}, {"version", kFormatVersion}}; }

json open_doc(const std::string& text, const char* format) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw PersistError(std::string("malformed document: ") + e.what());
    }
    if (!j.is_object() || j.value("format", "") != format)
        throw PersistError(std::string("not a ") + format + " document");
    if (j.value("version", -1) != kFormatVersion)
        throw PersistError("unsupported " + std::string(format) + " version " + j.value("version", json(-1)).dump());
    return j;
}

template <class F>
auto guarded(F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw PersistError(std::string("bad document content: ") + e.what());
    }
}

json stats_json(const RelationStats& s) {
    return json::array({s.n_target_observed, s.n_ss, s.n_incidence, s.n_concurrence});
}

RelationStats stats_from(const json& j) {
    return {j.at(0).get<std::uint64_t>(), j.at(1).get<std::uint64_t>(), j.at(2).get<std::uint64_t>(),
            j.at(3).get<std::uint64_t>()};
}

json spn_json(const Spn& p) {
    json nodes = json::array();
    for (const auto& [id, n] : p.nodes)
        nodes.push_back({{"id", id}, {"type", n.type}, {"x", n.x}, {"y", n.y}, {"n_pos", n.n_pos},
                         {"observed", n.presence.observed}, {"absent", n.presence.absent}});
    json nets = json::array();
    for (const auto& [k, sn] : p.nets) {
        json edges = json::array();
        for (const auto& [e, pr] : sn.edges) edges.push_back({e.first, e.second, pr.observed, pr.absent});
        nets.push_back({{"key", k}, {"edges", edges}});
    }
    return {{"nodes", nodes}, {"nets", nets}};
}

Spn spn_from(const json& j) {
    Spn p;
    for (const auto& n : j.at("nodes")) {
        SpnNode node;
        node.type = n.at("type").get<std::string>();
        node.x = n.at("x").get<double>();
        node.y = n.at("y").get<double>();
        node.n_pos = n.at("n_pos").get<std::uint64_t>();
        node.presence = {n.at("observed").get<std::uint64_t>(), n.at("absent").get<std::uint64_t>()};
        p.nodes[n.at("id").get<NodeId>()] = node;
    }
    for (const auto& sn : j.at("nets")) {
        StateNetwork net;
        for (const auto& e : sn.at("edges"))
            net.edges[{e.at(0).get<NodeId>(), e.at(1).get<NodeId>()}] = {e.at(2).get<std::uint64_t>(),
                                                                          e.at(3).get<std::uint64_t>()};
        p.nets.emplace_back(sn.at("key").get<std::string>(), std::move(net));
    }
    try {
        p.validate();
    } catch (const SpnError& e) {
        throw PersistError(e.what());
    }
    return p;
}

}  // namespace

std::string dump_model(const Model& m) {
    json j = header("modeller-model");
    const auto& c = m.config();
    j["config"] = {{"persistence", static_cast<int>(c.persistence)},
                   {"reset_stats_on_change", c.reset_stats_on_change},
                   {"reset_stats_on_protect", c.reset_stats_on_protect},
                   {"nce_blocking", c.nce_blocking},
                   {"eps_T", c.eps_T}};
    j["next_id"] = m.next_id();
    j["steps"] = m.step_count();
    j["has_history"] = m.has_history();
    json bsvs = json::array();
    for (SvId id : m.bsv_ids()) {
        const auto& b = m.bsv(id);
        bsvs.push_back({{"id", b.id}, {"label", b.label}, {"action", b.is_action}, {"prev", static_cast<int>(b.prev)},
                        {"cur", static_cast<int>(b.cur)}, {"dsv_a", b.dsv_a}, {"dsv_d", b.dsv_d}});
    }
    j["bsvs"] = bsvs;
    json dsvs = json::array();
    for (const auto& [id, d] : m.dsvs())
        dsvs.push_back({{"id", d.id}, {"owner", d.owner}, {"kind", static_cast<int>(d.kind)},
                        {"prev", static_cast<int>(d.prev)}, {"state", static_cast<int>(d.state)},
                        {"flag", static_cast<int>(d.flag)}, {"label", d.label}});
    j["dsvs"] = dsvs;
    json csvs = json::array();
    for (const auto& [id, c] : m.csvs()) {
        json st = json::array();
        for (const auto& [t, s] : c.stats) st.push_back({{"target", t}, {"counts", stats_json(s)}});
        csvs.push_back({{"id", c.id}, {"pos", c.pos}, {"neg", c.neg}, {"targets", c.targets},
                        {"neg_formed", c.neg_formed}, {"flag", static_cast<int>(c.flag)},
                        {"state", static_cast<int>(c.state)}, {"blocked", c.blocked}, {"stats", st},
                        {"label", c.label}});
    }
    j["csvs"] = csvs;
    return j.dump(1);
}

Model parse_model(const std::string& text) {
    const json j = open_doc(text, "modeller-model");
    return guarded([&] {
        ModelConfig cfg;
        const auto& c = j.at("config");
        cfg.persistence = static_cast<Persistence>(c.at("persistence").get<int>());
        cfg.reset_stats_on_change = c.at("reset_stats_on_change").get<bool>();
        cfg.reset_stats_on_protect = c.at("reset_stats_on_protect").get<bool>();
        cfg.nce_blocking = c.at("nce_blocking").get<bool>();
        cfg.eps_T = c.at("eps_T").get<double>();
        Model m(cfg);
        for (const auto& b : j.at("bsvs"))
            m.insert_bsv({b.at("id").get<SvId>(), b.at("label").get<std::string>(), b.at("action").get<bool>(),
                          static_cast<SvState>(b.at("prev").get<int>()), static_cast<SvState>(b.at("cur").get<int>()),
                          b.at("dsv_a").get<SvId>(), b.at("dsv_d").get<SvId>()});
        for (const auto& d : j.at("dsvs"))
            m.insert_dsv({d.at("id").get<SvId>(), d.at("owner").get<SvId>(), static_cast<DsvKind>(d.at("kind").get<int>()),
                          static_cast<SvState>(d.at("prev").get<int>()), static_cast<SvState>(d.at("state").get<int>()),
                          static_cast<Flag>(d.at("flag").get<int>()), d.at("label").get<std::string>()});
        for (const auto& x : j.at("csvs")) {
            ConditioningSv c;
            c.id = x.at("id").get<SvId>();
            c.pos = x.at("pos").get<IdSet>();
            c.neg = x.at("neg").get<IdSet>();
            c.targets = x.at("targets").get<IdSet>();
            c.neg_formed = x.at("neg_formed").get<bool>();
            c.flag = static_cast<Flag>(x.at("flag").get<int>());
            c.state = static_cast<SvState>(x.at("state").get<int>());
            c.blocked = x.at("blocked").get<bool>();
            for (const auto& s : x.at("stats")) c.stats[s.at("target").get<SvId>()] = stats_from(s.at("counts"));
            c.label = x.at("label").get<std::string>();
            m.insert_csv(std::move(c));
        }
        m.set_next_id(j.at("next_id").get<SvId>());
        m.set_step_count(j.at("steps").get<std::uint64_t>());
        m.set_has_history(j.at("has_history").get<bool>());
        return m;
    });
}

std::string dump_spn(const Spn& p) {
    json j = header("modeller-spn");
    j["spn"] = spn_json(p);
    return j.dump(1);
}

Spn parse_spn(const std::string& text) {
    const json j = open_doc(text, "modeller-spn");
    return guarded([&] { return spn_from(j.at("spn")); });
}

std::string dump_mnr(const MnrModel& m) {
    json j = header("modeller-mnr");
    const auto& c = m.config();
    j["config"] = {{"engage", static_cast<int>(c.engage)}, {"t_ref", c.t_ref}, {"eps_sign", c.eps_sign},
                   {"population", c.population}, {"max_depth", c.max_depth}};
    j["labels"] = m.labels();
    j["next_id"] = m.next_id();
    j["next_node"] = m.next_node_id();
    j["steps"] = m.steps();
    json csvs = json::array();
    for (const auto& [id, x] : m.csvs())
        csvs.push_back({{"id", x.id}, {"target", x.target}, {"polarity", static_cast<int>(x.polarity)},
                        {"unconditional", x.unconditional}, {"stats", stats_json(x.stats)}, {"depth", x.depth},
                        {"source", spn_json(x.source)}});
    j["csvs"] = csvs;
    return j.dump(1);
}

MnrModel parse_mnr(const std::string& text) {
    const json j = open_doc(text, "modeller-mnr");
    return guarded([&] {
        MnrConfig cfg;
        const auto& c = j.at("config");
        cfg.engage = static_cast<Engage>(c.at("engage").get<int>());
        cfg.t_ref = c.at("t_ref").get<double>();
        cfg.eps_sign = c.at("eps_sign").get<double>();
        cfg.population = c.at("population").get<std::size_t>();
        cfg.max_depth = c.at("max_depth").get<std::uint32_t>();
        MnrModel m(cfg);
        for (MnrId l : j.at("labels").get<std::set<MnrId>>()) m.add_label(l);
        for (const auto& x : j.at("csvs")) {
            MnrCsv csv;
            csv.id = x.at("id").get<MnrId>();
            csv.target = x.at("target").get<MnrId>();
            csv.polarity = static_cast<Polarity>(x.at("polarity").get<int>());
            csv.unconditional = x.at("unconditional").get<bool>();
            csv.stats = stats_from(x.at("stats"));
            csv.depth = x.at("depth").get<std::uint32_t>();
            csv.source = spn_from(x.at("source"));
            m.insert_csv(std::move(csv));
        }
        m.set_next_id(j.at("next_id").get<MnrId>());
        m.set_next_node(j.at("next_node").get<NodeId>());
        m.set_steps(j.at("steps").get<std::uint64_t>());
        return m;
    });
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PersistError(path + ": cannot write");
    out << text;
    if (!out) throw PersistError(path + ": write failed");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PersistError(path + ": cannot open");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void save_model(const std::string& path, const Model& m) { write_file(path, dump_model(m)); }
Model load_model(const std::string& path) { return parse_model(read_file(path)); }
void save_mnr(const std::string& path, const MnrModel& m) { write_file(path, dump_mnr(m)); }
MnrModel load_mnr(const std::string& path) { return parse_mnr(read_file(path)); }

std::string model_to_dot(const Model& m) {
    std::ostringstream o;
    auto q = [&](SvId id) { return json(m.label(id)).dump(); };
    o << "digraph model {\n";
    for (const auto& [id, c] : m.csvs()) {
        o << "  " << q(id) << " [shape=box" << (c.blocked ? ",style=dashed" : "") << "];\n";
        for (SvId s : c.pos) o << "  " << q(s) << " -> " << q(id) << ";\n";
        for (SvId s : c.neg) o << "  " << q(s) << " -> " << q(id) << " [arrowhead=tee];\n";
        for (SvId t : c.targets) o << "  " << q(id) << " -> " << q(t) << " [style=bold];\n";
    }
    o << "}\n";
    return o.str();
}

}  // namespace modeller
