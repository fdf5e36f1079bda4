#include "rootlift/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rootlift::io {

namespace {

using nlohmann::json;

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw ParseError("write failed for " + path.string());
}

std::string fmt_array(const Eigen::Vector3d& v) {
    return "[" + fmt_double(v.x()) + ", " + fmt_double(v.y()) + ", " + fmt_double(v.z()) + "]";
}

const json& require(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) throw ParseError(std::string("missing key \"") + key + "\"");
    return *it;
}

double as_finite_double(const json& j, const char* what) {
    if (!j.is_number()) throw ParseError(std::string(what) + " must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ParseError(std::string(what) + " must be finite");
    return v;
}

}  // namespace

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string scene_to_json(const synth::Scene& scene) {
    std::ostringstream out;
    out << "{\n";
    out << "  \"intrinsics\": {\"f\": " << fmt_double(scene.cam.f) << ", \"u0\": " << fmt_double(scene.cam.u0)
        << ", \"v0\": " << fmt_double(scene.cam.v0) << ", \"width\": " << scene.cam.width
        << ", \"height\": " << scene.cam.height << "},\n";

    out << "  \"vertices_rel\": [\n";
    for (size_t i = 0; i < scene.verts_rel.size(); ++i)
        out << "    " << fmt_array(scene.verts_rel[i]) << (i + 1 < scene.verts_rel.size() ? ",\n" : "\n");
    out << "  ],\n";

    out << "  \"j_reg\": [\n";
    for (Eigen::Index i = 0; i < scene.jreg.keypoints(); ++i) {
        out << "    [";
        for (Eigen::Index j = 0; j < scene.jreg.vertices(); ++j)
            out << fmt_double(scene.jreg.m(i, j)) << (j + 1 < scene.jreg.vertices() ? ", " : "");
        out << (i + 1 < scene.jreg.keypoints() ? "],\n" : "]\n");
    }
    out << "  ],\n";

    out << "  \"keypoints_2d\": [\n";
    for (size_t i = 0; i < scene.k2d_obs.size(); ++i)
        out << "    [" << fmt_double(scene.k2d_obs[i].u) << ", " << fmt_double(scene.k2d_obs[i].v) << "]"
            << (i + 1 < scene.k2d_obs.size() ? ",\n" : "\n");
    out << "  ],\n";

    if (scene.t_gt) out << "  \"translation_gt\": " << fmt_array(*scene.t_gt) << ",\n";
    if (scene.weights) {
        out << "  \"weights\": [";
        for (Eigen::Index i = 0; i < scene.weights->size(); ++i)
            out << fmt_double((*scene.weights)[i]) << (i + 1 < scene.weights->size() ? ", " : "");
        out << "],\n";
    }
    if (!scene.outlier_mask.empty()) {
        out << "  \"outlier_mask\": [";
        for (size_t i = 0; i < scene.outlier_mask.size(); ++i)
            out << (scene.outlier_mask[i] ? "true" : "false") << (i + 1 < scene.outlier_mask.size() ? ", " : "");
        out << "],\n";
    }
    out << "  \"seed\": " << scene.seed << "\n";
    out << "}\n";
    return out.str();
}

void save_scene(const std::filesystem::path& path, const synth::Scene& scene) {
    write_file(path, scene_to_json(scene));
}

synth::Scene load_scene(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError("invalid JSON in " + path.string() + ": " + e.what());
    }

    try {
        synth::Scene scene;
        const json& intr = require(doc, "intrinsics");
        scene.cam.f = as_finite_double(require(intr, "f"), "intrinsics.f");
        scene.cam.u0 = as_finite_double(require(intr, "u0"), "intrinsics.u0");
        scene.cam.v0 = as_finite_double(require(intr, "v0"), "intrinsics.v0");
        scene.cam.width = require(intr, "width").get<int>();
        scene.cam.height = require(intr, "height").get<int>();

        for (const auto& row : require(doc, "vertices_rel")) {
            if (!row.is_array() || row.size() != 3) throw ParseError("vertices_rel rows must have 3 entries");
            scene.verts_rel.emplace_back(as_finite_double(row[0], "vertex"), as_finite_double(row[1], "vertex"),
                                         as_finite_double(row[2], "vertex"));
        }

        const json& jreg = require(doc, "j_reg");
        if (!jreg.is_array() || jreg.empty()) throw ParseError("j_reg must be a non-empty matrix");
        scene.jreg.m.resize(static_cast<Eigen::Index>(jreg.size()),
                            static_cast<Eigen::Index>(scene.verts_rel.size()));
        for (Eigen::Index i = 0; i < scene.jreg.m.rows(); ++i) {
            const auto& row = jreg[static_cast<size_t>(i)];
            if (!row.is_array() || row.size() != scene.verts_rel.size())
                throw ParseError("j_reg row size does not match vertex count");
            for (Eigen::Index j = 0; j < scene.jreg.m.cols(); ++j)
                scene.jreg.m(i, j) = as_finite_double(row[static_cast<size_t>(j)], "j_reg entry");
        }

        for (const auto& row : require(doc, "keypoints_2d")) {
            if (!row.is_array() || row.size() != 2) throw ParseError("keypoints_2d rows must have 2 entries");
            scene.k2d_obs.push_back({as_finite_double(row[0], "keypoint"), as_finite_double(row[1], "keypoint")});
        }

        if (doc.contains("translation_gt")) {
            const auto& t = doc["translation_gt"];
            if (!t.is_array() || t.size() != 3) throw ParseError("translation_gt must have 3 entries");
            scene.t_gt = Translation3(as_finite_double(t[0], "translation"), as_finite_double(t[1], "translation"),
                                      as_finite_double(t[2], "translation"));
        }
        if (doc.contains("weights")) {
            const auto& w = doc["weights"];
            WeightVector wv(static_cast<Eigen::Index>(w.size()));
            for (Eigen::Index i = 0; i < wv.size(); ++i)
                wv[i] = as_finite_double(w[static_cast<size_t>(i)], "weight");
            scene.weights = wv;
        }
        if (doc.contains("outlier_mask")) {
            for (const auto& b : doc["outlier_mask"]) {
                if (!b.is_boolean()) throw ParseError("outlier_mask entries must be booleans");
                scene.outlier_mask.push_back(b.get<bool>());
            }
        }
        scene.seed = require(doc, "seed").get<uint64_t>();

        try {
            scene.validate();
        } catch (const Error& e) {
            throw ParseError("scene file violates the schema: " + std::string(e.what()));
        }
        return scene;
    } catch (const json::exception& e) {
        throw ParseError("schema error in " + path.string() + ": " + e.what());
    }
}

std::string result_to_json(const SolveResult& result, const double* error_vs_gt) {
    std::ostringstream out;
    out << "{\n";
    out << "  \"translation\": " << fmt_array(result.t) << ",\n";
    out << "  \"residual_norm\": " << fmt_double(result.residual_norm) << ",\n";
    out << "  \"cond_estimate\": " << fmt_double(result.cond_estimate) << ",\n";
    out << "  \"behind_camera\": [";
    for (size_t i = 0; i < result.behind_camera.size(); ++i)
        out << (result.behind_camera[i] ? "true" : "false") << (i + 1 < result.behind_camera.size() ? ", " : "");
    out << "],\n";
    if (error_vs_gt) out << "  \"error_vs_gt\": " << fmt_double(*error_vs_gt) << ",\n";
    out << "  \"version\": \"" << kToolVersion << "\"\n";
    out << "}\n";
    return out.str();
}

void save_result(const std::filesystem::path& path, const SolveResult& result, const double* error_vs_gt) {
    write_file(path, result_to_json(result, error_vs_gt));
}

std::string report_to_json(const toy::TrainReport& report) {
    const auto& cfg = report.config;
    std::ostringstream out;
    out << "{\n";
    out << "  \"config\": {\n";
    out << "    \"mode\": \"" << (cfg.mode == toy::TrainMode::e2e ? "e2e" : "detached") << "\",\n";
    out << "    \"rectified\": " << (cfg.rectified ? "true" : "false") << ",\n";
    out << "    \"epochs\": " << cfg.epochs << ",\n";
    out << "    \"lr\": " << fmt_double(cfg.lr) << ",\n";
    out << "    \"batch_size\": " << cfg.batch_size << ",\n";
    out << "    \"seed\": " << cfg.seed << ",\n";
    out << "    \"train_scenes\": " << cfg.train_scenes << ",\n";
    out << "    \"test_scenes\": " << cfg.test_scenes << ",\n";
    out << "    \"noise_px\": " << fmt_double(cfg.noise_px) << ",\n";
    out << "    \"outlier_count\": " << cfg.outlier_count << ",\n";
    out << "    \"input_noise3d\": " << fmt_double(cfg.input_noise3d) << ",\n";
    out << "    \"n_k\": " << cfg.gen.n_k << ",\n";
    out << "    \"n_v\": " << cfg.gen.n_v << ",\n";
    out << "    \"lambda_rel\": " << fmt_double(cfg.lambda_rel) << ",\n";
    out << "    \"lambda_2d\": " << fmt_double(cfg.lambda_2d) << ",\n";
    out << "    \"lambda_t\": " << fmt_double(cfg.lambda_t) << ",\n";
    out << "    \"lambda_kc\": " << fmt_double(cfg.lambda_kc) << ",\n";
    out << "    \"lambda_v2d\": " << fmt_double(cfg.lambda_v2d) << ",\n";
    out << "    \"canonical_f\": " << fmt_double(cfg.canonical_f) << ",\n";
    out << "    \"canonical_size\": " << cfg.canonical_size << "\n";
    out << "  },\n";

    const auto emit_series = [&](const char* key, auto&& pick) {
        out << "  \"" << key << "\": [";
        for (size_t i = 0; i < report.epochs.size(); ++i)
            out << fmt_double(pick(report.epochs[i])) << (i + 1 < report.epochs.size() ? ", " : "");
        out << "],\n";
    };
    emit_series("train_loss", [](const toy::EpochStats& e) { return e.train_loss; });
    emit_series("cs_mje_mm", [](const toy::EpochStats& e) { return e.cs_mje_mm; });
    emit_series("rs_mje_mm", [](const toy::EpochStats& e) { return e.rs_mje_mm; });
    emit_series("mean_inlier_weight", [](const toy::EpochStats& e) { return e.mean_inlier_weight; });
    emit_series("mean_outlier_weight", [](const toy::EpochStats& e) { return e.mean_outlier_weight; });

    out << "  \"final\": {\"cs_mje_mm\": " << fmt_double(report.final.cs_mje_mm)
        << ", \"rs_mje_mm\": " << fmt_double(report.final.rs_mje_mm)
        << ", \"mean_inlier_weight\": " << fmt_double(report.final.mean_inlier_weight)
        << ", \"mean_outlier_weight\": " << fmt_double(report.final.mean_outlier_weight)
        << ", \"solver_failures\": " << report.final.solver_failures << "},\n";
    out << "  \"skipped_camera_terms\": " << report.skipped_camera_terms << ",\n";
    out << "  \"version\": \"" << kToolVersion << "\"\n";
    out << "}\n";
    return out.str();
}

std::string report_to_csv(const toy::TrainReport& report) {
    std::ostringstream out;
    out << "epoch,train_loss,cs_mje_mm,rs_mje_mm,mean_inlier_weight,mean_outlier_weight\n";
    for (size_t i = 0; i < report.epochs.size(); ++i) {
        const auto& e = report.epochs[i];
        out << i << "," << fmt_double(e.train_loss) << "," << fmt_double(e.cs_mje_mm) << ","
            << fmt_double(e.rs_mje_mm) << "," << fmt_double(e.mean_inlier_weight) << ","
            << fmt_double(e.mean_outlier_weight) << "\n";
    }
    return out.str();
}

void save_report(const std::filesystem::path& json_path, const std::filesystem::path& csv_path,
                 const toy::TrainReport& report) {
    write_file(json_path, report_to_json(report));
    write_file(csv_path, report_to_csv(report));
}

}  // namespace rootlift::io
