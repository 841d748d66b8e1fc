#include "krsml/model_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "krsml/errors.hpp"

namespace krsml {

namespace {

constexpr const char* kMagic = "krsml-model";

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_row(std::ostream& out, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    for (Index j = 0; j < row.size(); ++j) out << (j ? " " : "") << fmt(row(j));
    out << '\n';
}

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::string word(const char* what) {
        std::string w;
        if (!(in_ >> w)) throw DataError(std::string("model file truncated: missing ") + what);
        return w;
    }

    void expect(const char* keyword) {
        const std::string w = word(keyword);
        if (w != keyword) throw DataError("model file: expected '" + std::string(keyword) + "', found '" + w + "'");
    }

    double real(const char* what) {
        const std::string w = word(what);
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(w.c_str(), &end);
        if (end != w.c_str() + w.size() || errno == ERANGE || !std::isfinite(v))
            throw DataError("model file: bad number '" + w + "' for " + what);
        return v;
    }

    long integer(const char* what) {
        const std::string w = word(what);
        char* end = nullptr;
        const long v = std::strtol(w.c_str(), &end, 10);
        if (end != w.c_str() + w.size()) throw DataError("model file: bad integer '" + w + "' for " + what);
        return v;
    }

    Index count(const char* what) {
        const long v = integer(what);
        if (v < 0 || v > 100'000'000) throw DataError(std::string("model file: implausible ") + what);
        return static_cast<Index>(v);
    }

    Eigen::MatrixXd matrix(Index rows, Index cols, const char* what) {
        Eigen::MatrixXd m(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j) m(i, j) = real(what);
        return m;
    }

private:
    std::istream& in_;
};

} // namespace

void write_model(const Model& model, std::ostream& out) {
    const Dataset& train = model.training_data();
    out << kMagic << ' ' << kModelFormatVersion << '\n';
    out << "learner " << learner_name(model.learner()) << '\n';
    out << "input_dim " << model.input_dim() << '\n';
    out << "dim " << model.metric().dim() << '\n';
    out << "sigma " << fmt(model.kernel().sigma) << '\n';
    out << "k_neighbors " << model.kernel().k_neighbors << '\n';
    out << "metric\n";
    for (Index i = 0; i < model.metric().dim(); ++i) write_row(out, model.metric().entries().row(i));
    out << "means ";
    write_row(out, model.standardizer().means.transpose());
    out << "scales ";
    write_row(out, model.standardizer().scales.transpose());
    if (const auto& pca = model.pca()) {
        out << "pca " << pca->basis.cols() << '\n' << "center ";
        write_row(out, pca->center.transpose());
        for (Index i = 0; i < pca->basis.rows(); ++i) write_row(out, pca->basis.row(i));
    } else {
        out << "pca 0\n";
    }
    out << "training " << train.n() << '\n';
    for (Index i = 0; i < train.n(); ++i) {
        Eigen::RowVectorXd row(train.d() + 1);
        row << train.features.row(i), train.targets(i);
        write_row(out, row);
    }
    out << "end\n";
}

void save_model(const Model& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file '" + path.string() + "'");
    write_model(model, out);
    if (!out) throw DataError("failed writing model file '" + path.string() + "'");
}

Model read_model(std::istream& in) {
    Reader r(in);
    if (r.word("header") != kMagic) throw DataError("not a krsml model file");
    const long version = r.integer("format version");
    if (version != kModelFormatVersion) {
        throw DataError("model file version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kModelFormatVersion) + ")");
    }
    r.expect("learner");
    const Learner learner = [&] {
        try {
            return parse_learner(r.word("learner"));
        } catch (const InvalidArgument& e) {
            throw DataError(std::string("model file: ") + e.what());
        }
    }();
    r.expect("input_dim");
    const Index input_dim = r.count("input_dim");
    r.expect("dim");
    const Index dim = r.count("dim");
    if (dim < 1 || input_dim < 1) throw DataError("model file: dimensions must be positive");
    r.expect("sigma");
    KernelConfig kernel;
    kernel.sigma = r.real("sigma");
    r.expect("k_neighbors");
    kernel.k_neighbors = static_cast<int>(r.integer("k_neighbors"));
    r.expect("metric");
    Eigen::MatrixXd metric = r.matrix(dim, dim, "metric entries");
    r.expect("means");
    Standardizer s;
    s.means = r.matrix(input_dim, 1, "standardizer means");
    r.expect("scales");
    s.scales = r.matrix(input_dim, 1, "standardizer scales");
    r.expect("pca");
    const Index p = r.count("pca dimension");
    std::optional<PcaProjection> pca;
    if (p > 0) {
        if (p != dim) throw DataError("model file: PCA dimension does not match the metric");
        r.expect("center");
        PcaProjection proj;
        proj.center = r.matrix(input_dim, 1, "pca center");
        proj.basis = r.matrix(input_dim, p, "pca basis");
        pca = std::move(proj);
    } else if (input_dim != dim) {
        throw DataError("model file: input_dim differs from dim without a PCA basis");
    }
    r.expect("training");
    const Index n = r.count("training count");
    const Eigen::MatrixXd rows = r.matrix(n, dim + 1, "training rows");
    r.expect("end");

    try {
        return Model(learner, MetricMatrix(metric), Dataset(rows.leftCols(dim), rows.col(dim)), kernel,
                     std::move(s), std::move(pca));
    } catch (const InvalidArgument& e) {
        throw DataError(std::string("model file is inconsistent: ") + e.what());
    }
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file '" + path.string() + "'");
    return read_model(in);
}

} // namespace krsml
