#pragma once

#include <stdexcept>
#include <string>

namespace imabc {

class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class invalid_spec : public error {
public:
    using error::error;
};

class undefined_moment : public error {
public:
    using error::error;
};

class degenerate_kernel : public error {
public:
    using error::error;
};

class schedule_violation : public error {
public:
    using error::error;
};

class ill_defined_distance : public error {
public:
    using error::error;
};

class empty_frontier : public error {
public:
    using error::error;
};

class empty_posterior : public error {
public:
    using error::error;
};

class out_of_domain : public error {
public:
    using error::error;
};

class config_error : public error {
public:
    using error::error;
};

} // namespace imabc
