#include "lusgate/network_spec.hpp"

#include <sstream>

#include "lusgate/errors.hpp"

namespace lusgate::nn {

LayerDesc LayerDesc::conv(int kh, int kw, int out_ch, int stride, Padding pad) {
    LayerDesc d;
    d.kind = LayerKind::Conv;
    d.kh = kh;
    d.kw = kw;
    d.out_ch = out_ch;
    d.stride = stride;
    d.pad = pad;
    return d;
}

LayerDesc LayerDesc::maxpool(int window, int stride) {
    LayerDesc d;
    d.kind = LayerKind::MaxPool;
    d.window = window;
    d.pool_stride = stride > 0 ? stride : window;
    return d;
}

LayerDesc LayerDesc::dense(int units) {
    LayerDesc d;
    d.kind = LayerKind::Dense;
    d.units = units;
    return d;
}

LayerDesc LayerDesc::relu() { return {LayerKind::Relu}; }
LayerDesc LayerDesc::sigmoid() { return {LayerKind::Sigmoid}; }
LayerDesc LayerDesc::tanh() { return {LayerKind::Tanh}; }
LayerDesc LayerDesc::flatten() { return {LayerKind::Flatten}; }
LayerDesc LayerDesc::softmax_head() { return {LayerKind::SoftmaxHead}; }
LayerDesc LayerDesc::sigmoid_head() { return {LayerKind::SigmoidHead}; }

namespace {

[[noreturn]] void spec_fail(int layer_index, const std::string& what) {
    throw SpecError("layer " + std::to_string(layer_index) + ": " + what);
}

int conv_out_dim(int in, int k, int stride, Padding pad) {
    if (pad == Padding::Same) return (in + stride - 1) / stride;
    return (in - k) / stride + 1;
}

}  // namespace

std::vector<Shape> NetworkSpec::shape_chain() const {
    if (in_h < 1 || in_w < 1 || in_c < 1) throw SpecError("input shape must be positive");
    std::vector<Shape> chain;
    chain.reserve(layers.size());
    Shape s{in_h, in_w, in_c};
    bool head_seen = false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerDesc& d = layers[i];
        int li = static_cast<int>(i);
        if (head_seen) spec_fail(li, "layers after head");
        switch (d.kind) {
            case LayerKind::Conv: {
                if (d.kh < 1 || d.kw < 1 || d.out_ch < 1 || d.stride < 1) spec_fail(li, "bad conv arguments");
                if (d.pad == Padding::Valid && (s.h < d.kh || s.w < d.kw))
                    spec_fail(li, "conv kernel larger than input");
                s = Shape{conv_out_dim(s.h, d.kh, d.stride, d.pad), conv_out_dim(s.w, d.kw, d.stride, d.pad),
                          d.out_ch};
                if (s.h < 1 || s.w < 1) spec_fail(li, "conv output collapsed to zero");
                break;
            }
            case LayerKind::MaxPool: {
                if (d.window < 1 || d.pool_stride < 1) spec_fail(li, "bad maxpool arguments");
                if (s.h < d.window || s.w < d.window) spec_fail(li, "maxpool window larger than input");
                s = Shape{(s.h - d.window) / d.pool_stride + 1, (s.w - d.window) / d.pool_stride + 1, s.c};
                break;
            }
            case LayerKind::Dense: {
                if (d.units < 1) spec_fail(li, "bad dense units");
                if (s.h != 1 || s.w != 1) spec_fail(li, "dense requires flattened input");
                s = Shape{1, 1, d.units};
                break;
            }
            case LayerKind::Relu:
            case LayerKind::Sigmoid:
            case LayerKind::Tanh:
                break;
            case LayerKind::Flatten:
                s = Shape{1, 1, s.size()};
                break;
            case LayerKind::SoftmaxHead:
                if (s.h != 1 || s.w != 1 || s.c < 2) spec_fail(li, "softmax head requires a flat vector of >=2 units");
                head_seen = true;
                break;
            case LayerKind::SigmoidHead:
                head_seen = true;
                break;
        }
        chain.push_back(s);
    }
    return chain;
}

Shape NetworkSpec::output_shape() const {
    auto chain = shape_chain();
    return chain.empty() ? Shape{in_h, in_w, in_c} : chain.back();
}

int NetworkSpec::trainable_layer_count() const {
    int n = 0;
    for (const auto& d : layers)
        if (d.trainable()) ++n;
    return n;
}

void NetworkSpec::validate() const {
    auto chain = shape_chain();
    if (trainable_layer_count() == 0) throw SpecError("network has no trainable layer");
    bool has_head = !layers.empty() && (layers.back().kind == LayerKind::SoftmaxHead ||
                                        layers.back().kind == LayerKind::SigmoidHead);
    if (loss == LossKind::CrossEntropy && (!has_head || layers.back().kind != LayerKind::SoftmaxHead))
        throw SpecError("cross-entropy loss requires a softmax head");
    if (loss == LossKind::BinaryCrossEntropy && (!has_head || layers.back().kind != LayerKind::SigmoidHead))
        throw SpecError("binary-cross-entropy loss requires a sigmoid head");
    if (loss == LossKind::AdvDiscriminator) {
        if (!has_head || layers.back().kind != LayerKind::SigmoidHead || chain.back().size() != 1)
            throw SpecError("discriminator role requires a single sigmoid output");
    }
    if (loss == LossKind::AdvGenerator) {
        Shape out = chain.back();
        if (out.h != in_h || out.w != in_w || out.c != in_c)
            throw SpecError("generator role requires output shape equal to input shape");
    }
}

std::string loss_name(LossKind k) {
    switch (k) {
        case LossKind::CrossEntropy: return "cross-entropy";
        case LossKind::BinaryCrossEntropy: return "binary-cross-entropy";
        case LossKind::MeanSquaredError: return "mean-squared-error";
        case LossKind::AdvGenerator: return "adversarial-generator";
        case LossKind::AdvDiscriminator: return "adversarial-discriminator";
    }
    return "?";
}

std::string NetworkSpec::canonical_text() const {
    std::ostringstream os;
    os << "lusgate-netspec v1\n";
    os << "input " << in_h << ' ' << in_w << ' ' << in_c << '\n';
    for (const auto& d : layers) {
        switch (d.kind) {
            case LayerKind::Conv:
                os << "conv " << d.kh << ' ' << d.kw << ' ' << d.out_ch << " stride " << d.stride << " pad "
                   << (d.pad == Padding::Same ? "same" : "valid") << '\n';
                break;
            case LayerKind::MaxPool:
                os << "maxpool " << d.window << ' ' << d.pool_stride << '\n';
                break;
            case LayerKind::Dense:
                os << "dense " << d.units << '\n';
                break;
            case LayerKind::Relu: os << "relu\n"; break;
            case LayerKind::Sigmoid: os << "sigmoid\n"; break;
            case LayerKind::Tanh: os << "tanh\n"; break;
            case LayerKind::Flatten: os << "flatten\n"; break;
            case LayerKind::SoftmaxHead: os << "softmax-head\n"; break;
            case LayerKind::SigmoidHead: os << "sigmoid-head\n"; break;
        }
    }
    os << "loss " << loss_name(loss) << '\n';
    return os.str();
}

NetworkSpec NetworkSpec::parse(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != "lusgate-netspec v1")
        throw SpecError("unrecognized netspec header: '" + line + "'");
    NetworkSpec spec;
    bool have_input = false, have_loss = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "input") {
            if (!(ls >> spec.in_h >> spec.in_w >> spec.in_c)) throw SpecError("bad input line");
            have_input = true;
        } else if (tok == "conv") {
            int kh, kw, oc, stride;
            std::string kw1, kw2, padname;
            if (!(ls >> kh >> kw >> oc >> kw1 >> stride >> kw2 >> padname) || kw1 != "stride" || kw2 != "pad")
                throw SpecError("bad conv line: " + line);
            Padding p;
            if (padname == "same")
                p = Padding::Same;
            else if (padname == "valid")
                p = Padding::Valid;
            else
                throw SpecError("bad conv padding: " + padname);
            spec.layers.push_back(LayerDesc::conv(kh, kw, oc, stride, p));
        } else if (tok == "maxpool") {
            int win, stride;
            if (!(ls >> win >> stride)) throw SpecError("bad maxpool line: " + line);
            spec.layers.push_back(LayerDesc::maxpool(win, stride));
        } else if (tok == "dense") {
            int units;
            if (!(ls >> units)) throw SpecError("bad dense line: " + line);
            spec.layers.push_back(LayerDesc::dense(units));
        } else if (tok == "relu") {
            spec.layers.push_back(LayerDesc::relu());
        } else if (tok == "sigmoid") {
            spec.layers.push_back(LayerDesc::sigmoid());
        } else if (tok == "tanh") {
            spec.layers.push_back(LayerDesc::tanh());
        } else if (tok == "flatten") {
            spec.layers.push_back(LayerDesc::flatten());
        } else if (tok == "softmax-head") {
            spec.layers.push_back(LayerDesc::softmax_head());
        } else if (tok == "sigmoid-head") {
            spec.layers.push_back(LayerDesc::sigmoid_head());
        } else if (tok == "loss") {
            std::string name;
            ls >> name;
            if (name == "cross-entropy")
                spec.loss = LossKind::CrossEntropy;
            else if (name == "binary-cross-entropy")
                spec.loss = LossKind::BinaryCrossEntropy;
            else if (name == "mean-squared-error")
                spec.loss = LossKind::MeanSquaredError;
            else if (name == "adversarial-generator")
                spec.loss = LossKind::AdvGenerator;
            else if (name == "adversarial-discriminator")
                spec.loss = LossKind::AdvDiscriminator;
            else
                throw SpecError("unknown loss: " + name);
            have_loss = true;
        } else {
            throw SpecError("unknown netspec token: " + tok);
        }
    }
    if (!have_input || !have_loss) throw SpecError("netspec missing input or loss line");
    return spec;
}

std::uint64_t NetworkSpec::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : canonical_text()) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

NetworkSpec vgg_classifier_spec(int h, int w, int c, int n_classes) {
    NetworkSpec s;
    s.in_h = h;
    s.in_w = w;
    s.in_c = c;
    for (int width : {8, 16, 32}) {
        s.layers.push_back(LayerDesc::conv(3, 3, width));
        s.layers.push_back(LayerDesc::relu());
        s.layers.push_back(LayerDesc::conv(3, 3, width));
        s.layers.push_back(LayerDesc::relu());
        s.layers.push_back(LayerDesc::maxpool(2, 2));
    }
    s.layers.push_back(LayerDesc::flatten());
    s.layers.push_back(LayerDesc::dense(64));
    s.layers.push_back(LayerDesc::relu());
    s.layers.push_back(LayerDesc::dense(n_classes));
    s.layers.push_back(LayerDesc::softmax_head());
    s.loss = LossKind::CrossEntropy;
    s.validate();
    return s;
}

NetworkSpec reconstructor_spec(int h, int w, int c) {
    NetworkSpec s;
    s.in_h = h;
    s.in_w = w;
    s.in_c = c;
    s.layers.push_back(LayerDesc::conv(5, 5, 8));
    s.layers.push_back(LayerDesc::relu());
    s.layers.push_back(LayerDesc::conv(3, 3, 8));
    s.layers.push_back(LayerDesc::relu());
    s.layers.push_back(LayerDesc::conv(3, 3, 4));
    s.layers.push_back(LayerDesc::relu());
    s.layers.push_back(LayerDesc::conv(3, 3, c));
    s.layers.push_back(LayerDesc::sigmoid_head());
    s.loss = LossKind::AdvGenerator;
    s.validate();
    return s;
}

NetworkSpec discriminator_spec(int h, int w, int c) {
    NetworkSpec s;
    s.in_h = h;
    s.in_w = w;
    s.in_c = c;
    for (int width : {8, 16}) {
        s.layers.push_back(LayerDesc::conv(3, 3, width));
        s.layers.push_back(LayerDesc::relu());
        s.layers.push_back(LayerDesc::maxpool(2, 2));
    }
    s.layers.push_back(LayerDesc::conv(3, 3, 32));
    s.layers.push_back(LayerDesc::relu());
    s.layers.push_back(LayerDesc::maxpool(2, 2));
    s.layers.push_back(LayerDesc::flatten());
    s.layers.push_back(LayerDesc::dense(32));
    s.layers.push_back(LayerDesc::relu());
    s.layers.push_back(LayerDesc::dense(1));
    s.layers.push_back(LayerDesc::sigmoid_head());
    s.loss = LossKind::AdvDiscriminator;
    s.validate();
    return s;
}

}  // namespace lusgate::nn
