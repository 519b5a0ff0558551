#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "hiest/gradcheck.hpp"
#include "hiest/tensor.hpp"

using namespace hiest;

TEST_CASE("grad_check passes on sum(sigmoid(Wx))") {
    std::mt19937_64 rng(1);
    Tensor w = Tensor::uniform({3, 4}, -0.5, 0.5, rng, true);
    Tensor x = Tensor::uniform({4, 2}, -1.0, 1.0, rng);
    auto f = [&] { return sum(sigmoid(matmul(w, x))); };
    auto report = grad_check(f, {{"w", w}});
    CHECK(report.passed());
    CHECK(report.worst() < 1e-4);
}

TEST_CASE("grad_check fails on an intentionally wrong backward rule") {
    Tensor x = Tensor::from_data({3}, {0.3, -0.7, 1.2}, true);
    // square with a corrupted rule: claims d(x^2)/dx = 3x
    auto bad_square = [](const Tensor& in) {
        Tensor out = Tensor::zeros(in.shape());
        for (std::size_t i = 0; i < in.size(); ++i)
            out.mutable_data()[i] = in.data()[i] * in.data()[i];
        if (Tape::active() && in.requires_grad()) {
            out.set_requires_grad(true);
            Tape::push([inn = in.node(), on = out.node()] {
                if (on->grad.empty()) return;
                inn->ensure_grad();
                for (std::size_t i = 0; i < inn->grad.size(); ++i)
                    inn->grad[i] += on->grad[i] * 3.0 * inn->value[i];
            });
        }
        return out;
    };
    auto f = [&] { return sum(bad_square(x)); };
    auto report = grad_check(f, {{"x", x}});
    CHECK_FALSE(report.passed());
}

TEST_CASE("grad_check passes trivially on a constant function") {
    Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
    auto f = [] { return Tensor::scalar(42.0); };
    auto report = grad_check(f, {{"x", x}});
    CHECK(report.passed());
    CHECK(report.worst() == 0.0);
}

TEST_CASE("every primitive passes a finite-difference check") {
    std::mt19937_64 rng(23);
    // operands kept away from kinks (relu/abs at 0, clamp bounds)
    Tensor a = Tensor::uniform({3, 4}, 0.2, 1.5, rng, true);
    Tensor b = Tensor::uniform({3, 4}, 0.2, 1.5, rng, true);
    Tensor m = Tensor::uniform({4, 3}, -1.0, 1.0, rng, true);
    Tensor v = Tensor::uniform({3}, 0.5, 2.0, rng, true);
    Tensor conv_x = Tensor::uniform({2, 3, 7}, -1.0, 1.0, rng, true);
    Tensor conv_w = Tensor::uniform({2, 3, 2}, -1.0, 1.0, rng, true);
    Tensor conv_b = Tensor::uniform({2}, -0.5, 0.5, rng, true);
    Tensor lin_b = Tensor::uniform({3}, -0.5, 0.5, rng, true);
    Tensor h4 = Tensor::uniform({2, 2, 4, 3}, -1.0, 1.0, rng, true);
    Tensor m_map = Tensor::uniform({5, 4}, -1.0, 1.0, rng, true);

    std::vector<std::pair<std::string, std::function<Tensor()>>> cases = {
        {"add", [&] { return sum(mul(add(a, b), a)); }},
        {"sub", [&] { return sum(mul(sub(a, b), b)); }},
        {"mul", [&] { return sum(mul(a, b)); }},
        {"div", [&] { return sum(div(a, b)); }},
        {"scale_shift", [&] { return sum(add_scalar(scale(a, -1.7), 0.3)); }},
        {"relu", [&] { return sum(relu(sub(a, b))); }},
        {"sigmoid", [&] { return sum(sigmoid(a)); }},
        {"tanh", [&] { return sum(hiest::tanh(a)); }},
        {"abs", [&] { return sum(hiest::abs(sub(a, scale(b, 1.1)))); }},
        {"log", [&] { return sum(hiest::log(a)); }},
        {"clamp", [&] { return sum(clamp(a, 0.1, 1.2)); }},
        {"matmul", [&] { return sum(matmul(a, m)); }},
        {"transpose", [&] { return sum(mul(transpose(a), m)); }},
        {"gram", [&] { return sum(gram(a)); }},
        {"linear", [&] { return sum(linear(a, m, lin_b)); }},
        {"node_matmul", [&] { return sum(node_matmul(m_map, h4)); }},
        {"div_colvec", [&] { return sum(div_colvec(a, v)); }},
        {"reshape", [&] { return sum(mul(reshape(a, {4, 3}), m)); }},
        {"permute", [&] { return sum(mul(permute(a, {1, 0}), m)); }},
        {"slice", [&] { return sum(slice(a, 1, 1, 2)); }},
        {"pad_front", [&] { return sum(mul(pad_front(a, 0, 1), pad_front(b, 0, 1))); }},
        {"conv", [&] { return sum(dilated_causal_conv1d(conv_x, conv_w, conv_b, 2)); }},
        {"softmax", [&] { return sum(mul(softmax(a, 1), b)); }},
        {"sum_axis", [&] { return sum(mul(sum(h4, 2), sum(h4, 2))); }},
        {"mean", [&] { return mean(mul(a, a)); }},
        {"mean_abs", [&] { return mean_abs(sub(a, b)); }},
        {"l2_norm", [&] { return l2_norm(a); }},
    };

    std::vector<std::pair<std::string, Tensor>> params = {
        {"a", a},         {"b", b},         {"m", m},          {"v", v},
        {"conv_x", conv_x}, {"conv_w", conv_w}, {"conv_b", conv_b}, {"lin_b", lin_b},
        {"h4", h4},       {"m_map", m_map},
    };

    for (auto& [name, f] : cases) {
        CAPTURE(name);
        auto report = grad_check(f, params, 1e-5, 1e-4);
        if (!report.passed()) MESSAGE(name, "\n", report.summary());
        CHECK(report.passed());
    }
}
