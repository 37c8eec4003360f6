#pragma once

// JSON and CSV serialization of results. Keys come out in a fixed order and every
// double is printed with 17 significant digits, so equal results give equal bytes.

#include <string>

#include <json.hpp>

#include "fbllab/homs.hpp"
#include "fbllab/pietsch.hpp"
#include "fbllab/space.hpp"
#include "fbllab/summing.hpp"

namespace fbllab {

using Json = nlohmann::ordered_json;

Json to_json(const NormEstimate& e);
Json to_json(const DominationCertificate& c);
Json to_json(const CertificateReport& r);
Json to_json(const LpExtension& x);
Json to_json(const ExtensionReport& r);
Json to_json(const DConvexityReport& r);
Json to_json(const SupNorm& s);
Json to_json(const WeakNorm& w);
Json to_json(const InclusionReport& r);
Json to_json(const DivergenceReport& r);
Json to_json(const CotypeTable& t);

// Infinite doubles become the strings "inf" / "-inf", NaN becomes null.
Json number(double v);

// Indented JSON with %.17g doubles and a trailing newline.
std::string dump_json(const Json& j);

// One "path,value" row per leaf; paths join object keys and array indices with '.'.
std::string flatten_csv(const Json& j);

}  // namespace fbllab
