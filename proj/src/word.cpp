#include "pu/word.hpp"

#include <algorithm>
#include <stdexcept>

namespace pu {

SymbolWord::SymbolWord(std::string_view bits) {
    for (char c : bits) {
        if (c == '0')
            push_back(0);
        else if (c == '1')
            push_back(1);
        else
            throw std::invalid_argument("SymbolWord: digits must be '0' or '1'");
    }
}

SymbolWord SymbolWord::zeros(std::size_t n) {
    SymbolWord w;
    for (std::size_t i = 0; i < n; ++i) w.push_back(0);
    return w;
}

SymbolWord SymbolWord::ones(std::size_t n) {
    SymbolWord w;
    for (std::size_t i = 0; i < n; ++i) w.push_back(1);
    return w;
}

SymbolWord SymbolWord::repeat(std::string_view pattern, std::size_t n) {
    if (pattern.empty()) throw std::invalid_argument("SymbolWord: empty pattern");
    SymbolWord w;
    for (std::size_t i = 0; i < n; ++i) {
        char c = pattern[i % pattern.size()];
        if (c != '0' && c != '1')
            throw std::invalid_argument("SymbolWord: digits must be '0' or '1'");
        w.push_back(c - '0');
    }
    return w;
}

void SymbolWord::push_back(int b) {
    if (size_ >= kMaxLength) throw std::length_error("SymbolWord: length cap 4096");
    if (b != 0 && b != 1) throw std::invalid_argument("SymbolWord: bit must be 0/1");
    if ((size_ & 63) == 0) blocks_.push_back(0);
    blocks_[size_ >> 6] |= (static_cast<std::uint64_t>(b) << (size_ & 63));
    ++size_;
}

void SymbolWord::pop_back() {
    if (size_ == 0) throw std::out_of_range("SymbolWord: pop on empty word");
    --size_;
    blocks_[size_ >> 6] &= ~(std::uint64_t{1} << (size_ & 63));
    if ((size_ & 63) == 0) blocks_.pop_back();
}

SymbolWord SymbolWord::prefix(std::size_t n) const {
    if (n > size_) throw std::out_of_range("SymbolWord: prefix beyond length");
    SymbolWord w;
    for (std::size_t i = 0; i < n; ++i) w.push_back(bit(i));
    return w;
}

SymbolWord SymbolWord::shift(std::size_t n) const {
    if (n > size_) throw std::out_of_range("SymbolWord: shift beyond length");
    SymbolWord w;
    for (std::size_t i = n; i < size_; ++i) w.push_back(bit(i));
    return w;
}

SymbolWord SymbolWord::concat(const SymbolWord& tail) const {
    SymbolWord w = *this;
    for (std::size_t i = 0; i < tail.size(); ++i) w.push_back(tail.bit(i));
    return w;
}

bool SymbolWord::operator==(const SymbolWord& o) const {
    return size_ == o.size_ && blocks_ == o.blocks_;
}

std::string SymbolWord::to_string() const {
    std::string s(size_, '0');
    for (std::size_t i = 0; i < size_; ++i) s[i] = char('0' + bit(i));
    return s;
}

std::size_t wedge(const SymbolWord& i, const SymbolWord& j) {
    std::size_t n = std::min(i.size(), j.size());
    for (std::size_t k = 0; k < n; ++k)
        if (i.bit(k) != j.bit(k)) return k;
    return n;
}

}  // namespace pu
