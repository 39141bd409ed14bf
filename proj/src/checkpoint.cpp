#include "kgperc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "kgperc/errors.hpp"
#include "kgperc/transe.hpp"
#include "kgperc/tsv.hpp"

namespace kgperc {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

void put_u64(std::string& out, std::uint64_t v) {
    char bytes[8];
    std::memcpy(bytes, &v, 8);
    out.append(bytes, 8);
}

std::uint64_t get_u64(const std::string& buf, std::size_t at) {
    std::uint64_t v = 0;
    std::memcpy(&v, buf.data() + at, 8);
    return v;
}

nlohmann::json shape(const Eigen::MatrixXd& m) { return {m.rows(), m.cols()}; }

const Eigen::MatrixXd& find_array(const CheckpointFile& file, const std::string& name) {
    for (const auto& a : file.arrays)
        if (a.name == name) return a.values;
    throw FormatError("checkpoint has no array '" + name + "'");
}

template <typename T>
T header_field(const nlohmann::json& header, const char* key) {
    if (!header.contains(key)) throw FormatError(fmt::format("checkpoint header lacks '{}'", key));
    try {
        return header.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("checkpoint header field '{}': {}", key, e.what()));
    }
}

}  // namespace

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointFile& file) {
    nlohmann::json header = file.header;
    header["version"] = kCheckpointVersion;
    auto& arrays = header["arrays"] = nlohmann::json::array();
    for (const auto& a : file.arrays)
        arrays.push_back({{"name", a.name}, {"rows", a.values.rows()}, {"cols", a.values.cols()}});
    const std::string text = header.dump();

    std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
    put_u64(out, text.size());
    out += text;
    for (const auto& a : file.arrays)
        out.append(reinterpret_cast<const char*>(a.values.data()),
                   static_cast<std::size_t>(a.values.size()) * sizeof(double));

    auto stream = tsv::open_for_write(path);
    stream.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!stream) throw Error("failed writing " + path.string());
}

CheckpointFile read_checkpoint_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint " + path.string());
    const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    constexpr std::size_t magic_size = sizeof(kCheckpointMagic);
    if (buf.size() < magic_size)
        throw TruncatedFileError(path.string() + ": truncated before magic bytes");
    if (std::memcmp(buf.data(), kCheckpointMagic, magic_size) != 0)
        throw MagicMismatchError(path.string() + ": not a checkpoint (magic bytes mismatch)");
    if (buf.size() < magic_size + 8)
        throw TruncatedFileError(path.string() + ": truncated header length");
    const auto header_len = get_u64(buf, magic_size);
    std::size_t offset = magic_size + 8;
    if (header_len > buf.size() - offset)
        throw TruncatedFileError(path.string() + ": truncated header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(buf.substr(offset, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": malformed header: " + e.what());
    }
    offset += header_len;

    const auto version = header_field<int>(header, "version");
    if (version != kCheckpointVersion)
        throw VersionMismatchError(fmt::format("{}: checkpoint version {} (expected {})",
                                               path.string(), version, kCheckpointVersion));

    CheckpointFile file;
    for (const auto& entry : header_field<nlohmann::json>(header, "arrays")) {
        const auto name = header_field<std::string>(entry, "name");
        const auto rows = header_field<Eigen::Index>(entry, "rows");
        const auto cols = header_field<Eigen::Index>(entry, "cols");
        if (rows < 0 || cols < 0) throw FormatError("negative array shape in checkpoint");
        const auto bytes = static_cast<std::size_t>(rows * cols) * sizeof(double);
        if (bytes > buf.size() - offset)
            throw TruncatedFileError(fmt::format("{}: truncated in array '{}'", path.string(), name));
        NamedArray array{name, Eigen::MatrixXd(rows, cols)};
        std::memcpy(array.values.data(), buf.data() + offset, bytes);
        offset += bytes;
        file.arrays.push_back(std::move(array));
    }
    if (offset != buf.size())
        throw FormatError(fmt::format("{}: {} trailing bytes", path.string(), buf.size() - offset));

    header.erase("arrays");
    header.erase("version");
    file.header = std::move(header);
    return file;
}

bool Hyperparams::operator==(const Hyperparams& other) const {
    return nlohmann::json(model) == nlohmann::json(other.model) &&
           nlohmann::json(train) == nlohmann::json(other.train) &&
           node_counts == other.node_counts && category_count == other.category_count;
}

void save_checkpoint(const ModelParams& params, const Hyperparams& hp,
                     const std::filesystem::path& path) {
    CheckpointFile file;
    file.header = {
        {"kind", "model"},
        {"K", hp.model.propagated_layers()},
        {"d", hp.model.dimension},
        {"node_counts",
         {{"user", hp.node_counts[0]}, {"news", hp.node_counts[1]}, {"entity", hp.node_counts[2]}}},
        {"category_count", hp.category_count},
        {"table_shapes",
         {{"v1", shape(params.context.position)},
          {"v2", shape(params.context.frequency)},
          {"v3", shape(params.context.category)}}},
        {"model", hp.model},
        {"train", hp.train},
    };
    const auto names = ModelParams::block_names(params.layers.size());
    const auto blocks = params.blocks();
    for (std::size_t i = 0; i < blocks.size(); ++i) file.arrays.push_back({names[i], *blocks[i]});
    write_checkpoint_file(path, file);
}

std::pair<ModelParams, Hyperparams> load_checkpoint(const std::filesystem::path& path) {
    const auto file = read_checkpoint_file(path);
    if (file.header.value("kind", "") != "model")
        throw FormatError(path.string() + ": not a model checkpoint");

    Hyperparams hp;
    hp.model = header_field<ModelConfig>(file.header, "model");
    hp.train = header_field<TrainConfig>(file.header, "train");
    const auto counts = header_field<nlohmann::json>(file.header, "node_counts");
    hp.node_counts = {header_field<std::uint64_t>(counts, "user"),
                      header_field<std::uint64_t>(counts, "news"),
                      header_field<std::uint64_t>(counts, "entity")};
    hp.category_count = header_field<std::uint64_t>(file.header, "category_count");
    const auto k = header_field<int>(file.header, "K");
    if (k != hp.model.propagated_layers())
        throw FormatError(fmt::format("header K = {} but model config implies {} layers", k,
                                      hp.model.propagated_layers()));

    ModelParams params;
    params.layers.resize(static_cast<std::size_t>(k));
    const auto names = ModelParams::block_names(params.layers.size());
    auto blocks = params.blocks();
    if (file.arrays.size() != blocks.size())
        throw FormatError(fmt::format("expected {} arrays for K = {}, found {}", blocks.size(), k,
                                      file.arrays.size()));
    for (std::size_t i = 0; i < blocks.size(); ++i) *blocks[i] = find_array(file, names[i]);

    const auto d = hp.model.dimension;
    const auto n = static_cast<Eigen::Index>(hp.node_counts[0] + hp.node_counts[1] + hp.node_counts[2]);
    if (params.base.rows() != d || params.base.cols() != n)
        throw FormatError("base embedding shape disagrees with header");
    return {std::move(params), hp};
}

void save_transe(const TransEState& state, const std::array<std::uint64_t, 3>& node_counts,
                 const std::filesystem::path& path) {
    CheckpointFile file;
    file.header = {
        {"kind", "transe"},
        {"K", 0},
        {"d", state.dimension},
        {"margin", state.margin},
        {"node_counts",
         {{"user", node_counts[0]}, {"news", node_counts[1]}, {"entity", node_counts[2]}}},
    };
    file.arrays.push_back({"base", state.entity_vectors});
    file.arrays.push_back({"relations", state.relation_vectors});
    write_checkpoint_file(path, file);
}

TransEState load_transe(const std::filesystem::path& path) {
    const auto file = read_checkpoint_file(path);
    if (file.header.value("kind", "") != "transe")
        throw FormatError(path.string() + ": not a TransE checkpoint");
    TransEState state;
    state.dimension = header_field<int>(file.header, "d");
    state.margin = header_field<double>(file.header, "margin");
    state.entity_vectors = find_array(file, "base");
    state.relation_vectors = find_array(file, "relations");
    if (state.entity_vectors.rows() != state.dimension ||
        state.relation_vectors.rows() != state.dimension)
        throw FormatError("TransE vector shape disagrees with header");
    return state;
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = {{"dimension", c.dimension},
         {"hops", c.hops},
         {"leaky_slope", c.leaky_slope},
         {"use_propagation", c.use_propagation},
         {"use_context", c.use_context}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    c.dimension = j.value("dimension", c.dimension);
    c.hops = j.value("hops", c.hops);
    c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
    c.use_propagation = j.value("use_propagation", c.use_propagation);
    c.use_context = j.value("use_context", c.use_context);
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"epochs", c.epochs},
         {"batch_size", c.batch_size},
         {"learning_rate", c.learning_rate},
         {"reg_weight", c.reg_weight},
         {"seed", c.seed},
         {"optimizer", std::string(to_string(c.optimizer))},
         {"threads", c.threads},
         {"validate_every", c.validate_every},
         {"keep_best_validation", c.keep_best_validation}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.reg_weight = j.value("reg_weight", c.reg_weight);
    c.seed = j.value("seed", c.seed);
    if (j.contains("optimizer")) c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    c.threads = j.value("threads", c.threads);
    c.validate_every = j.value("validate_every", c.validate_every);
    c.keep_best_validation = j.value("keep_best_validation", c.keep_best_validation);
}

}  // namespace kgperc
