#include "sssdet/netdef.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace sssdet {

namespace {

const std::vector<Anchor> kDefaultAnchors = {
    {1.2f, 1.7f}, {2.5f, 4.0f}, {5.0f, 6.5f}, {9.0f, 10.0f}};

struct KeyValue {
    std::string value;
    int line = 0;
    bool used = false;
};

struct Section {
    std::string name;
    int line = 0;
    std::map<std::string, KeyValue> options;
};

std::string trim(const std::string& s)
{
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& what)
{
    throw ConfigError(strcat_msg("config line ", line, ": ", what));
}

std::vector<Section> read_sections(const std::string& text)
{
    std::vector<Section> sections;
    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        size_t hash = raw.find('#');
        if (hash != std::string::npos) {
            raw.erase(hash);
        }
        std::string line = trim(raw);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                fail(line_no, "malformed section header '" + line + "'");
            }
            Section s;
            s.name = line.substr(1, line.size() - 2);
            s.line = line_no;
            sections.push_back(std::move(s));
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos) {
            fail(line_no, "expected key=value, got '" + line + "'");
        }
        if (sections.empty()) {
            fail(line_no, "key=value before any section header");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            fail(line_no, "empty key or value in '" + line + "'");
        }
        auto [it, inserted] = sections.back().options.emplace(key, KeyValue{value, line_no});
        if (!inserted) {
            fail(line_no, "duplicate key '" + key + "' in [" + sections.back().name + "]");
        }
    }
    return sections;
}

int64_t parse_int(const std::string& value, int line)
{
    size_t pos = 0;
    int64_t v = 0;
    try {
        v = std::stoll(value, &pos);
    } catch (const std::exception&) {
        fail(line, "expected integer, got '" + value + "'");
    }
    if (pos != value.size()) {
        fail(line, "expected integer, got '" + value + "'");
    }
    return v;
}

double parse_float(const std::string& value, int line)
{
    size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        fail(line, "expected number, got '" + value + "'");
    }
    if (pos != value.size()) {
        fail(line, "expected number, got '" + value + "'");
    }
    return v;
}

class OptionReader {
public:
    explicit OptionReader(Section& s) : section_(s) {}

    bool has(const std::string& key) const { return section_.options.count(key) != 0; }

    int get_int(const std::string& key, int fallback)
    {
        auto it = section_.options.find(key);
        if (it == section_.options.end()) {
            return fallback;
        }
        it->second.used = true;
        return static_cast<int>(parse_int(it->second.value, it->second.line));
    }

    int require_int(const std::string& key)
    {
        auto it = section_.options.find(key);
        if (it == section_.options.end()) {
            fail(section_.line, "[" + section_.name + "] is missing required key '" + key + "'");
        }
        it->second.used = true;
        return static_cast<int>(parse_int(it->second.value, it->second.line));
    }

    std::string get_str(const std::string& key, const std::string& fallback)
    {
        auto it = section_.options.find(key);
        if (it == section_.options.end()) {
            return fallback;
        }
        it->second.used = true;
        return it->second.value;
    }

    std::vector<double> get_float_list(const std::string& key)
    {
        auto it = section_.options.find(key);
        if (it == section_.options.end()) {
            return {};
        }
        it->second.used = true;
        std::vector<double> out;
        std::string item;
        std::istringstream is(it->second.value);
        while (std::getline(is, item, ',')) {
            item = trim(item);
            if (item.empty()) {
                fail(it->second.line, "empty entry in list '" + key + "'");
            }
            out.push_back(parse_float(item, it->second.line));
        }
        return out;
    }

    int line_of(const std::string& key) const
    {
        auto it = section_.options.find(key);
        return it == section_.options.end() ? section_.line : it->second.line;
    }

    // every key must have been consumed by one of the getters
    void reject_unknown() const
    {
        for (const auto& [key, kv] : section_.options) {
            if (!kv.used) {
                fail(kv.line, "unknown key '" + key + "' in [" + section_.name + "]");
            }
        }
    }

private:
    Section& section_;
};

int64_t conv_params(const LayerSpec& l, int in_c)
{
    int64_t weights = static_cast<int64_t>(l.kernel) * l.kernel * in_c * l.filters;
    int64_t bn = l.batch_normalize ? 4LL * l.filters : 0LL;
    return weights + bn;
}

int64_t conv_flops(const LayerSpec& l, int in_c, int out_h, int out_w)
{
    return 2LL * l.kernel * l.kernel * in_c * l.filters * out_h * out_w;
}

std::string fmt(const char* format, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

std::string shape_str(const ShapeCHW& s)
{
    return strcat_msg(s.c, "x", s.h, "x", s.w);
}

} // namespace

const LayerSpec& NetworkDef::region() const
{
    if (!has_region()) {
        throw ConfigError("network has no region layer");
    }
    return layers.back();
}

int NetworkDef::grid_size() const
{
    const ShapeCHW& s = out_shapes.back();
    if (s.h != s.w) {
        throw ConfigError(strcat_msg("head grid is not square: ", s.h, "x", s.w));
    }
    return s.h;
}

int64_t NetworkDef::total_params() const
{
    return std::accumulate(layer_params.begin(), layer_params.end(), int64_t{0});
}

int64_t NetworkDef::total_flops() const
{
    return std::accumulate(layer_flops.begin(), layer_flops.end(), int64_t{0});
}

int NetworkDef::conv_count() const
{
    return static_cast<int>(std::count_if(layers.begin(), layers.end(), [](const LayerSpec& l) {
        return l.kind == LayerKind::Convolutional;
    }));
}

int NetworkDef::maxpool_count() const
{
    return static_cast<int>(std::count_if(layers.begin(), layers.end(), [](const LayerSpec& l) {
        return l.kind == LayerKind::Maxpool;
    }));
}

NetworkDef parse_config(const std::string& text)
{
    std::vector<Section> sections = read_sections(text);
    if (sections.empty()) {
        throw ConfigError("config has no sections");
    }
    if (sections.front().name != "net") {
        fail(sections.front().line, "first section must be [net], got [" + sections.front().name + "]");
    }

    NetworkDef def;
    {
        OptionReader net(sections.front());
        def.input_w = net.require_int("width");
        def.input_h = net.require_int("height");
        def.input_c = net.require_int("channels");
        net.reject_unknown();
        if (def.input_w < 1 || def.input_h < 1 || def.input_c < 1) {
            fail(sections.front().line, "net width/height/channels must be positive");
        }
    }
    if (sections.size() == 1) {
        throw ConfigError("config defines no layers after [net]");
    }

    ShapeCHW shape = def.input_shape();
    for (size_t si = 1; si < sections.size(); ++si) {
        Section& sec = sections[si];
        OptionReader opt(sec);
        LayerSpec layer;
        layer.cfg_line = sec.line;
        int layer_index = static_cast<int>(si - 1);

        if (sec.name == "convolutional") {
            layer.kind = LayerKind::Convolutional;
            layer.filters = opt.require_int("filters");
            layer.kernel = opt.get_int("size", 3);
            layer.batch_normalize = opt.get_int("batch_normalize", 0) != 0;
            int stride = opt.get_int("stride", 1);
            int pad = opt.get_int("pad", 1);
            std::string act = opt.get_str("activation", "leaky");
            opt.reject_unknown();

            if (layer.filters < 1) {
                fail(sec.line, "filters must be positive");
            }
            if (layer.kernel != 1 && layer.kernel != 3) {
                fail(opt.line_of("size"), strcat_msg("conv size must be 1 or 3, got ", layer.kernel));
            }
            if (stride != 1) {
                fail(opt.line_of("stride"), "conv stride must be 1 (downsampling is pooling only)");
            }
            if (pad == 0 && layer.kernel != 1) {
                fail(opt.line_of("pad"), "pad=0 is only valid for 1x1 convs (outputs keep spatial size)");
            }
            if (act == "leaky") {
                layer.activation = Activation::Leaky;
            } else if (act == "linear") {
                layer.activation = Activation::Linear;
            } else {
                fail(opt.line_of("activation"), "unknown activation '" + act + "'");
            }

            def.layer_params.push_back(conv_params(layer, shape.c));
            def.layer_flops.push_back(conv_flops(layer, shape.c, shape.h, shape.w));
            shape = {layer.filters, shape.h, shape.w};
        } else if (sec.name == "maxpool") {
            layer.kind = LayerKind::Maxpool;
            int size = opt.get_int("size", 2);
            int stride = opt.get_int("stride", 2);
            opt.reject_unknown();
            if (size != 2 || stride != 2) {
                fail(sec.line, "maxpool supports only non-overlapping 2x2 windows");
            }
            if (shape.h % 2 != 0 || shape.w % 2 != 0) {
                fail(sec.line, strcat_msg("layer ", layer_index, " [maxpool]: input ",
                                          shape_str(shape), " has odd spatial size"));
            }
            def.layer_params.push_back(0);
            def.layer_flops.push_back(0);
            shape = {shape.c, shape.h / 2, shape.w / 2};
        } else if (sec.name == "region") {
            layer.kind = LayerKind::Region;
            layer.classes = opt.require_int("classes");
            layer.num_anchors = opt.require_int("num");
            std::vector<double> values = opt.get_float_list("anchors");
            opt.reject_unknown();

            if (layer.classes < 1) {
                fail(sec.line, "region classes must be >= 1");
            }
            if (layer.num_anchors < 1) {
                fail(sec.line, "region num must be >= 1");
            }
            if (values.empty()) {
                if (layer.num_anchors != static_cast<int>(kDefaultAnchors.size())) {
                    fail(sec.line, strcat_msg("region without anchors= requires num=",
                                              kDefaultAnchors.size(), " (the default priors)"));
                }
                layer.anchors = kDefaultAnchors;
            } else {
                if (values.size() != static_cast<size_t>(2 * layer.num_anchors)) {
                    fail(opt.line_of("anchors"),
                         strcat_msg("anchors= needs ", 2 * layer.num_anchors, " values for num=",
                                    layer.num_anchors, ", got ", values.size()));
                }
                for (int a = 0; a < layer.num_anchors; ++a) {
                    float w = static_cast<float>(values[2 * a]);
                    float h = static_cast<float>(values[2 * a + 1]);
                    if (w <= 0.0f || h <= 0.0f) {
                        fail(opt.line_of("anchors"), "anchor dimensions must be positive");
                    }
                    layer.anchors.push_back({w, h});
                }
            }

            if (si != sections.size() - 1) {
                fail(sec.line, "[region] must be the last layer");
            }
            if (def.layers.empty() || def.layers.back().kind != LayerKind::Convolutional) {
                fail(sec.line, "[region] must follow the head convolution");
            }
            int expected = layer.num_anchors * (5 + layer.classes);
            if (shape.c != expected) {
                fail(sec.line, strcat_msg("final conv filters (", shape.c,
                                          ") must equal num x (5 + classes) = ", layer.num_anchors,
                                          " x (5 + ", layer.classes, ") = ", expected));
            }
            def.layer_params.push_back(0);
            def.layer_flops.push_back(0);
            // shape unchanged: region reinterprets the head tensor
        } else {
            fail(sec.line, "unknown section [" + sec.name + "]");
        }

        def.layers.push_back(std::move(layer));
        def.out_shapes.push_back(shape);
    }

    // a region anywhere but the tail was already rejected above; also reject duplicates
    for (size_t i = 0; i + 1 < def.layers.size(); ++i) {
        if (def.layers[i].kind == LayerKind::Region) {
            fail(def.layers[i].cfg_line, "[region] must appear exactly once, last");
        }
    }
    return def;
}

NetworkDef load_config(const std::string& path)
{
    std::ifstream ifs(path, std::ios::binary);
    if (!ifs) {
        throw IoError("cannot open config file: " + path);
    }
    std::ostringstream buf;
    buf << ifs.rdbuf();
    return parse_config(buf.str());
}

ComplexityReport account(const NetworkDef& def)
{
    ComplexityReport report;
    for (size_t i = 0; i < def.layers.size(); ++i) {
        const LayerSpec& l = def.layers[i];
        ComplexityRow row;
        row.index = static_cast<int>(i);
        row.in = def.layer_input_shape(i);
        row.out = def.out_shapes[i];
        row.params = def.layer_params[i];
        row.flops = def.layer_flops[i];
        switch (l.kind) {
        case LayerKind::Convolutional:
            row.kind = "conv";
            row.detail = strcat_msg(l.kernel, "x", l.kernel, "/", l.filters,
                                    l.batch_normalize ? " bn" : "",
                                    l.activation == Activation::Leaky ? " leaky" : " linear");
            break;
        case LayerKind::Maxpool:
            row.kind = "maxpool";
            row.detail = "2x2/2";
            break;
        case LayerKind::Region:
            row.kind = "region";
            row.detail = strcat_msg(l.num_anchors, " anchors, ", l.classes, " classes");
            break;
        }
        report.rows.push_back(std::move(row));
        report.total_params += def.layer_params[i];
        report.total_flops += def.layer_flops[i];
    }
    // header (3 x int32 + 1 x int64) + one float per parameter
    report.model_size_bytes = 20 + 4 * report.total_params;
    return report;
}

std::string summarize(const NetworkDef& def)
{
    ComplexityReport r = account(def);
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%3s  %-8s %-22s %-15s %-15s %12s %16s", "idx", "kind",
                  "detail", "input", "output", "params", "flops");
    os << buf << "\n";
    for (const ComplexityRow& row : r.rows) {
        std::snprintf(buf, sizeof(buf), "%3d  %-8s %-22s %-15s %-15s %12lld %16lld", row.index,
                      row.kind.c_str(), row.detail.c_str(), shape_str(row.in).c_str(),
                      shape_str(row.out).c_str(), static_cast<long long>(row.params),
                      static_cast<long long>(row.flops));
        os << buf << "\n";
    }
    os << "totals: " << r.rows.size() << " layers, params " << r.total_params << " ("
       << fmt("%.2f", r.params_millions()) << " M), flops " << r.total_flops << " ("
       << fmt("%.2f", r.bflops()) << " BFLOPs), model size " << r.model_size_bytes << " bytes ("
       << fmt("%.2f", r.model_size_mb()) << " MB)\n";
    return os.str();
}

std::string summarize_csv(const NetworkDef& def)
{
    ComplexityReport r = account(def);
    std::ostringstream os;
    os << "index,kind,detail,in_c,in_h,in_w,out_c,out_h,out_w,params,flops\n";
    for (const ComplexityRow& row : r.rows) {
        os << row.index << ',' << row.kind << ",\"" << row.detail << "\"," << row.in.c << ','
           << row.in.h << ',' << row.in.w << ',' << row.out.c << ',' << row.out.h << ','
           << row.out.w << ',' << row.params << ',' << row.flops << "\n";
    }
    os << "total,,,,,,,,," << r.total_params << ',' << r.total_flops << "\n";
    return os.str();
}

} // namespace sssdet
