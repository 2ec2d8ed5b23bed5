// SPDX-License-Identifier: Apache-2.0
#include "fnx/expr.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>

namespace fnx {
namespace detail {

enum class Op {
    number,
    variable,  // 0-based index
    add,
    sub,
    mul,
    div,
    pow,
    neg,
    fn_exp,
    fn_log,
    fn_sin,
    fn_cos,
    fn_abs,
    fn_sqrt,
    fn_min2,
    fn_max2,
};

struct ExprNode {
    Op op;
    double value = 0.0;  // number
    int var = 0;         // variable
    std::shared_ptr<const ExprNode> a, b;
};

using NodePtr = std::shared_ptr<const ExprNode>;

namespace {

NodePtr make_num(double v) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::number;
    n->value = v;
    return n;
}

NodePtr make_node(Op op, NodePtr a, NodePtr b = nullptr) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

// expr   := term (("+"|"-") term)*
// term   := factor (("*"|"/") factor)*
// factor := base ("^" factor)?
// base   := number | "x"digit+ | const | func "(" expr ("," expr)? ")" | "(" expr ")" | "-" base
class Parser {
  public:
    Parser(const std::string& src, int dim) : src_(src), dim_(dim) {}

    NodePtr run() {
        skip_ws();
        NodePtr e = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected trailing input");
        return e;
    }

  private:
    [[noreturn]] void fail(const std::string& what) const {
        std::ostringstream os;
        os << "parse error at position " << pos_ << ": " << what << " in \"" << src_ << "\"";
        fail_config(os.str());
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    NodePtr parse_expr() {
        NodePtr e = parse_term();
        for (;;) {
            if (eat('+'))
                e = make_node(Op::add, e, parse_term());
            else if (eat('-'))
                e = make_node(Op::sub, e, parse_term());
            else
                return e;
        }
    }

    NodePtr parse_term() {
        NodePtr e = parse_factor();
        for (;;) {
            if (eat('*'))
                e = make_node(Op::mul, e, parse_factor());
            else if (eat('/'))
                e = make_node(Op::div, e, parse_factor());
            else
                return e;
        }
    }

    NodePtr parse_factor() {
        NodePtr base = parse_base();
        if (eat('^')) return make_node(Op::pow, base, parse_factor());
        return base;
    }

    NodePtr parse_base() {
        const char c = peek();
        if (c == '-') {
            eat('-');
            return make_node(Op::neg, parse_base());
        }
        if (c == '(') {
            eat('(');
            NodePtr e = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
        fail("expected number, variable, constant, function or '('");
    }

    NodePtr parse_number() {
        skip_ws();
        const char* begin = src_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        pos_ += static_cast<size_t>(end - begin);
        return make_num(v);
    }

    NodePtr parse_ident() {
        skip_ws();
        const size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])))) {
            ++pos_;
        }
        const std::string id = src_.substr(start, pos_ - start);
        if (id.size() >= 2 && id[0] == 'x' && std::isdigit(static_cast<unsigned char>(id[1]))) {
            bool all_digits = true;
            for (size_t i = 1; i < id.size(); ++i)
                all_digits = all_digits && std::isdigit(static_cast<unsigned char>(id[i]));
            if (all_digits) {
                const long idx = std::strtol(id.c_str() + 1, nullptr, 10);
                if (idx < 1) fail("variable index must be >= 1");
                if (idx > dim_) {
                    std::ostringstream os;
                    os << "variable x" << idx << " exceeds dim " << dim_;
                    fail(os.str());
                }
                auto n = std::make_shared<ExprNode>();
                n->op = Op::variable;
                n->var = static_cast<int>(idx - 1);
                return n;
            }
        }
        if (id == "e") return make_num(std::exp(1.0));
        if (id == "pi") return make_num(4.0 * std::atan(1.0));
        if (id == "inf") return make_num(1e300);

        Op op;
        bool two_arg = false;
        if (id == "exp")
            op = Op::fn_exp;
        else if (id == "log")
            op = Op::fn_log;
        else if (id == "sin")
            op = Op::fn_sin;
        else if (id == "cos")
            op = Op::fn_cos;
        else if (id == "abs")
            op = Op::fn_abs;
        else if (id == "sqrt")
            op = Op::fn_sqrt;
        else if (id == "min2") {
            op = Op::fn_min2;
            two_arg = true;
        } else if (id == "max2") {
            op = Op::fn_max2;
            two_arg = true;
        } else {
            fail("unknown identifier '" + id + "'");
        }
        if (!eat('(')) fail("expected '(' after function name");
        NodePtr a = parse_expr();
        NodePtr b;
        if (two_arg) {
            if (!eat(',')) fail("expected ',' in two-argument function");
            b = parse_expr();
        }
        if (!eat(')')) fail("expected ')'");
        return make_node(op, a, b);
    }

    const std::string& src_;
    int dim_;
    size_t pos_ = 0;
};

double eval_node(const ExprNode& n, std::span<const double> x) {
    switch (n.op) {
        case Op::number:
            return n.value;
        case Op::variable:
            return x[static_cast<size_t>(n.var)];
        case Op::add:
            return eval_node(*n.a, x) + eval_node(*n.b, x);
        case Op::sub:
            return eval_node(*n.a, x) - eval_node(*n.b, x);
        case Op::mul:
            return eval_node(*n.a, x) * eval_node(*n.b, x);
        case Op::div:
            return eval_node(*n.a, x) / eval_node(*n.b, x);
        case Op::pow:
            return std::pow(eval_node(*n.a, x), eval_node(*n.b, x));
        case Op::neg:
            return -eval_node(*n.a, x);
        case Op::fn_exp:
            return std::exp(eval_node(*n.a, x));
        case Op::fn_log:
            return std::log(eval_node(*n.a, x));
        case Op::fn_sin:
            return std::sin(eval_node(*n.a, x));
        case Op::fn_cos:
            return std::cos(eval_node(*n.a, x));
        case Op::fn_abs:
            return std::abs(eval_node(*n.a, x));
        case Op::fn_sqrt:
            return std::sqrt(eval_node(*n.a, x));
        case Op::fn_min2:
            return std::min(eval_node(*n.a, x), eval_node(*n.b, x));
        case Op::fn_max2:
            return std::max(eval_node(*n.a, x), eval_node(*n.b, x));
    }
    return 0.0;  // unreachable
}

void print_node(const ExprNode& n, std::ostream& os) {
    auto binary = [&](const char* sym) {
        os << '(';
        print_node(*n.a, os);
        os << sym;
        print_node(*n.b, os);
        os << ')';
    };
    auto fn = [&](const char* name) {
        os << name << '(';
        print_node(*n.a, os);
        if (n.b) {
            os << ',';
            print_node(*n.b, os);
        }
        os << ')';
    };
    switch (n.op) {
        case Op::number: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", n.value);
            os << buf;
            return;
        }
        case Op::variable:
            os << 'x' << (n.var + 1);
            return;
        case Op::add:
            binary("+");
            return;
        case Op::sub:
            binary("-");
            return;
        case Op::mul:
            binary("*");
            return;
        case Op::div:
            binary("/");
            return;
        case Op::pow:
            binary("^");
            return;
        case Op::neg:
            os << "(-";
            print_node(*n.a, os);
            os << ')';
            return;
        case Op::fn_exp:
            fn("exp");
            return;
        case Op::fn_log:
            fn("log");
            return;
        case Op::fn_sin:
            fn("sin");
            return;
        case Op::fn_cos:
            fn("cos");
            return;
        case Op::fn_abs:
            fn("abs");
            return;
        case Op::fn_sqrt:
            fn("sqrt");
            return;
        case Op::fn_min2:
            fn("min2");
            return;
        case Op::fn_max2:
            fn("max2");
            return;
    }
}

}  // namespace
}  // namespace detail

ScalarField ScalarField::parse(const std::string& src, int dim) {
    if (dim < 0 || dim > kMaxDim) fail_config("ScalarField: dim out of range");
    detail::Parser p(src, dim);
    ScalarField f;
    f.root_ = p.run();
    f.source_ = src;
    f.dim_ = dim;
    return f;
}

ScalarField ScalarField::constant(double value, int dim) {
    ScalarField f;
    f.root_ = detail::make_num(value);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    f.source_ = buf;
    f.dim_ = dim;
    return f;
}

double ScalarField::eval(std::span<const double> x) const {
    return detail::eval_node(*root_, x);
}

std::string ScalarField::print() const {
    std::ostringstream os;
    detail::print_node(*root_, os);
    return os.str();
}

namespace {

// Corner-aligned lattice: endpoints included, nested under s -> 2s-1.
std::vector<double> lattice_axis(double lo, double hi, long s) {
    std::vector<double> t(static_cast<size_t>(s));
    for (long i = 0; i < s; ++i)
        t[static_cast<size_t>(i)] = (s == 1) ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(s - 1);
    return t;
}

struct Lattice {
    std::vector<Point> pts;
    std::vector<bool> on_shell;
};

Lattice build_lattice(const Box& box, long s) {
    Lattice lat;
    std::array<std::vector<double>, kMaxDim> axes;
    for (int d = 0; d < box.dim; ++d)
        axes[static_cast<size_t>(d)] = lattice_axis(box.lo[static_cast<size_t>(d)], box.hi[static_cast<size_t>(d)], s);
    long total = 1;
    for (int d = 0; d < box.dim; ++d) total *= s;
    lat.pts.reserve(static_cast<size_t>(total));
    lat.on_shell.reserve(static_cast<size_t>(total));
    std::array<long, kMaxDim> idx{};
    for (long k = 0; k < total; ++k) {
        Point p;
        p.n = box.dim;
        bool shell = false;
        for (int d = 0; d < box.dim; ++d) {
            p[d] = axes[static_cast<size_t>(d)][static_cast<size_t>(idx[static_cast<size_t>(d)])];
            shell = shell || idx[static_cast<size_t>(d)] == 0 || idx[static_cast<size_t>(d)] == s - 1;
        }
        lat.pts.push_back(p);
        lat.on_shell.push_back(shell);
        for (int d = 0; d < box.dim; ++d) {
            if (++idx[static_cast<size_t>(d)] < s) break;
            idx[static_cast<size_t>(d)] = 0;
        }
    }
    return lat;
}

std::vector<double> eval_lattice(const FieldFn& f, const Lattice& lat) {
    std::vector<double> v(lat.pts.size());
    for (size_t i = 0; i < lat.pts.size(); ++i) {
        v[i] = f(lat.pts[i].span());
        if (!std::isfinite(v[i])) {
            std::ostringstream os;
            os << "field evaluation failed at (";
            for (int d = 0; d < lat.pts[i].n; ++d) os << (d ? "," : "") << lat.pts[i][d];
            os << ")";
            fail_numeric(os.str());
        }
    }
    return v;
}

}  // namespace

std::pair<double, double> field_range(const FieldFn& f, const Box& box, long samples) {
    if (samples < 2) fail_config("field_range: samples must be >= 2");
    const Lattice lat = build_lattice(box, samples);
    const std::vector<double> v = eval_lattice(f, lat);
    double lo = v[0], hi = v[0];
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    return {lo, hi};
}

std::pair<double, double> field_range(const ScalarField& f, const Box& box, long samples) {
    return field_range([&](std::span<const double> x) { return f.eval(x); }, box, samples);
}

RegularityReport estimate_log_holder(const FieldFn& f, int dim, const Box& box, long samples,
                                     std::optional<double> g_inf_override) {
    if (samples < 2) fail_config("estimate_log_holder: samples must be >= 2");
    (void)dim;
    const Lattice lat = build_lattice(box, samples);
    const std::vector<double> v = eval_lattice(f, lat);
    const size_t n = v.size();

    RegularityReport rep;
    rep.samples_per_axis = samples;
    rep.inf = v[0];
    rep.sup = v[0];
    for (double x : v) {
        rep.inf = std::min(rep.inf, x);
        rep.sup = std::max(rep.sup, x);
    }

    double shell_sum = 0.0;
    long shell_count = 0;
    for (size_t i = 0; i < n; ++i) {
        if (lat.on_shell[i]) {
            shell_sum += v[i];
            ++shell_count;
        }
    }
    rep.g_infinity = g_inf_override ? *g_inf_override : shell_sum / static_cast<double>(shell_count);

    const double e = std::exp(1.0);
    std::vector<double> local_max(n, 0.0);
    parallel_for(n, [&](size_t i) {
        double m = 0.0;
        for (size_t j = i + 1; j < n; ++j) {
            const double d = dist2(lat.pts[i], lat.pts[j]);
            if (d <= 0) continue;
            m = std::max(m, std::abs(v[i] - v[j]) * std::log(e + 1.0 / d));
        }
        local_max[i] = m;
    });
    for (double m : local_max) rep.clog_local = std::max(rep.clog_local, m);

    for (size_t i = 0; i < n; ++i) {
        const double r = norm2(lat.pts[i]);
        rep.clog_global = std::max(rep.clog_global, std::abs(v[i] - rep.g_infinity) * std::log(e + r));
    }
    return rep;
}

RegularityReport estimate_log_holder(const ScalarField& f, const Box& box, long samples,
                                     std::optional<double> g_inf_override) {
    return estimate_log_holder([&](std::span<const double> x) { return f.eval(x); }, f.dim(), box,
                               samples, g_inf_override);
}

}  // namespace fnx
