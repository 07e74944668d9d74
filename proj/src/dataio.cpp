#include "rfp/dataio.hpp"

#include <fstream>

#include "json.hpp"
#include "rfp/errors.hpp"

namespace rfp {

using nlohmann::json;

namespace {

json channel_to_json(const ChannelConfig& c) {
    json j;
    j["snr_db"] = c.snr_db;
    j["cfo_norm"] = c.cfo_norm;
    j["phase_deg"] = c.phase_deg;
    if (!c.multipath_taps.empty()) {
        json taps = json::array();
        for (const cfloat& t : c.multipath_taps) taps.push_back({t.real(), t.imag()});
        j["multipath_taps"] = taps;
    }
    return j;
}

ChannelConfig channel_from_json(const json& j) {
    ChannelConfig c;
    c.snr_db = j.at("snr_db").get<float>();
    c.cfo_norm = j.at("cfo_norm").get<float>();
    c.phase_deg = j.at("phase_deg").get<float>();
    if (j.contains("multipath_taps"))
        for (const auto& t : j.at("multipath_taps"))
            c.multipath_taps.emplace_back(t.at(0).get<float>(), t.at(1).get<float>());
    return c;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream f(path, mode);
    if (!f) throw data_error("cannot write " + path);
    return f;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream f(path, mode);
    if (!f) throw data_error("cannot read " + path);
    return f;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& prefix) {
    std::ofstream payload = open_out(prefix + ".iq", std::ios::binary);
    json manifest;
    manifest["seed"] = ds.seed;
    manifest["n_classes"] = ds.n_classes;
    json recs = json::array();
    uint64_t offset = 0;
    for (size_t i = 0; i < ds.records.size(); ++i) {
        const IQRecord& r = ds.records[i];
        payload.write(reinterpret_cast<const char*>(r.samples.data()),
                      static_cast<std::streamsize>(r.samples.size() * sizeof(cfloat)));
        json jr;
        jr["offset"] = offset;
        jr["length"] = r.samples.size();
        jr["class"] = r.label;
        jr["sps"] = ds.sps[i];
        jr["seed"] = ds.record_seeds[i];
        jr["channel"] = channel_to_json(ds.channels[i]);
        recs.push_back(std::move(jr));
        offset += r.samples.size() * sizeof(cfloat);
    }
    manifest["records"] = std::move(recs);
    manifest["train"] = ds.train;
    manifest["val"] = ds.val;
    manifest["test"] = ds.test;
    open_out(prefix + ".json") << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::string& prefix) {
    json manifest;
    open_in(prefix + ".json") >> manifest;
    std::ifstream payload = open_in(prefix + ".iq", std::ios::binary);

    Dataset ds;
    ds.seed = manifest.at("seed").get<uint64_t>();
    ds.n_classes = manifest.at("n_classes").get<int>();
    for (const auto& jr : manifest.at("records")) {
        IQRecord r;
        const uint64_t offset = jr.at("offset").get<uint64_t>();
        const size_t length = jr.at("length").get<size_t>();
        r.samples.resize(length);
        payload.seekg(static_cast<std::streamoff>(offset));
        payload.read(reinterpret_cast<char*>(r.samples.data()),
                     static_cast<std::streamsize>(length * sizeof(cfloat)));
        if (!payload) throw data_error("truncated payload in " + prefix + ".iq");
        r.label = jr.at("class").get<int>();
        ds.records.push_back(std::move(r));
        ds.sps.push_back(jr.at("sps").get<int>());
        ds.record_seeds.push_back(jr.at("seed").get<uint64_t>());
        ds.channels.push_back(channel_from_json(jr.at("channel")));
    }
    ds.train = manifest.at("train").get<std::vector<int>>();
    ds.val = manifest.at("val").get<std::vector<int>>();
    ds.test = manifest.at("test").get<std::vector<int>>();
    return ds;
}

void save_spectrogram_cache(const std::vector<Spectrogram>& specs, const std::vector<int>& labels,
                            const std::string& prefix) {
    if (specs.size() != labels.size())
        throw data_error("spectrogram cache: specs/labels size mismatch");
    std::ofstream payload = open_out(prefix + ".f32", std::ios::binary);
    for (const Spectrogram& s : specs)
        payload.write(reinterpret_cast<const char*>(s.values.data()),
                      static_cast<std::streamsize>(s.values.size() * sizeof(float)));
    json header;
    header["count"] = specs.size();
    header["rows"] = kSpecSize;
    header["cols"] = kSpecSize;
    header["labels"] = labels;
    open_out(prefix + ".json") << header.dump(2) << "\n";
}

std::pair<std::vector<Spectrogram>, std::vector<int>> load_spectrogram_cache(
    const std::string& prefix) {
    json header;
    open_in(prefix + ".json") >> header;
    const size_t count = header.at("count").get<size_t>();
    std::vector<int> labels = header.at("labels").get<std::vector<int>>();
    std::ifstream payload = open_in(prefix + ".f32", std::ios::binary);
    std::vector<Spectrogram> specs(count);
    for (Spectrogram& s : specs) {
        s.values.resize(static_cast<size_t>(kSpecSize) * kSpecSize);
        payload.read(reinterpret_cast<char*>(s.values.data()),
                     static_cast<std::streamsize>(s.values.size() * sizeof(float)));
        if (!payload) throw data_error("truncated spectrogram cache " + prefix + ".f32");
    }
    return {std::move(specs), std::move(labels)};
}

DatasetSpec load_dataset_spec(const std::string& path) {
    json j;
    open_in(path) >> j;
    DatasetSpec spec;
    spec.classes.clear();
    for (const auto& jc : j.at("classes")) {
        ModScheme s;
        s.kind = modulation_from_name(jc.at("mod").get<std::string>());
        s.samples_per_symbol = jc.value("sps", 8);
        const std::string pulse = jc.value("pulse", "rrc");
        if (pulse == "rect")
            s.pulse = PulseShape::Rectangular;
        else if (pulse == "rrc")
            s.pulse = PulseShape::RootRaisedCosine;
        else
            throw config_error("unknown pulse shape: " + pulse);
        s.rrc_rolloff = jc.value("rolloff", 0.35f);
        spec.classes.push_back(s);
    }
    spec.per_class_count = j.value("per_class_count", 100);
    spec.record_samples = j.value("record_samples", 1024);
    if (j.contains("split")) {
        const auto sp = j.at("split").get<std::vector<float>>();
        if (sp.size() != 3) throw config_error("split must have 3 fractions");
        spec.split = {sp[0], sp[1], sp[2]};
    }
    if (j.contains("sps_variants")) spec.sps_variants = j.at("sps_variants").get<std::vector<int>>();
    if (j.contains("channel")) {
        const auto& jc = j.at("channel");
        if (jc.contains("snr_db")) {
            spec.channel.snr_db_min = jc.at("snr_db").at(0).get<float>();
            spec.channel.snr_db_max = jc.at("snr_db").at(1).get<float>();
        }
        if (jc.contains("cfo")) {
            spec.channel.cfo_min = jc.at("cfo").at(0).get<float>();
            spec.channel.cfo_max = jc.at("cfo").at(1).get<float>();
        }
        if (jc.contains("phase_deg")) {
            spec.channel.phase_min_deg = jc.at("phase_deg").at(0).get<float>();
            spec.channel.phase_max_deg = jc.at("phase_deg").at(1).get<float>();
        }
        spec.channel.multipath_taps = jc.value("multipath_taps", 0);
        spec.channel.tap_strength = jc.value("tap_strength", 0.5f);
    }
    spec.seed = j.value("seed", 1);
    spec.validate();
    return spec;
}

}  // namespace rfp
