#include <doctest.h>

#include <sstream>

#include "carcensus/errors.hpp"
#include "carcensus/taxonomy.hpp"

using namespace carcensus;

namespace {

const char* kHeader =
    "class_id\tmake\tmodel\tsubmodel\tyear_start\tyear_end\ttrim\tbody_type\tprice_usd\tmpg\t"
    "country\tis_foreign\n";

ClassTable table_from(const std::string& rows) {
    std::istringstream in(std::string(kHeader) + rows);
    return load_taxonomy(in);
}

// make/price/body variety for attribute tests
ClassTable toy_table() {
    return table_from(
        "0\tHummer\tH2\tBase\t2003\t2007\tLux\tSUV\t55000\t12\tUSA\t0\n"
        "1\tHonda\tAccord\tLX\t2001\t2005\tBase\tsedan\t21000\t28\tJapan\t1\n"
        "2\tHonda\tAccord\tDX\t2001\t2005\tBase\tsedan\t20000\t29\tJapan\t1\n"
        "3\tFord\tF150\tXL\t2000\t2004\tBase\tcrew-cab truck\t30000\t17\tUSA\t0\n"
        "4\tFord\tFocus\tSE\t2000\t2004\tBase\thatchback\t\t30\tUSA\t0\n");
}

}  // namespace

TEST_CASE("load_taxonomy basics") {
    const ClassTable t = toy_table();
    CHECK(t.size() == 5);
    CHECK(t.at(0).make == "Hummer");
    CHECK(t.at(4).price_usd == std::nullopt);  // empty numeric field means missing
    CHECK(t.at(1).is_foreign);
    CHECK(t.makes() == std::vector<std::string>{"Hummer", "Honda", "Ford"});
}

TEST_CASE("empty file with valid header gives C = 0") {
    const ClassTable t = table_from("");
    CHECK(t.size() == 0);
    CHECK_THROWS_AS(t.at(0), ValidationError);
}

TEST_CASE("duplicate class_id rejected, naming the id") {
    CHECK_THROWS_WITH_AS(
        table_from("0\tA\tm\ts\t2000\t2001\tt\tsedan\t1\t1\tUSA\t0\n"
                   "1\tA\tm\ts\t2000\t2001\tt\tsedan\t1\t1\tUSA\t0\n"
                   "1\tA\tm\ts\t2000\t2001\tt\tsedan\t1\t1\tUSA\t0\n"),
        doctest::Contains("duplicate class_id 1"), ValidationError);
}

TEST_CASE("missing column is a schema error") {
    std::istringstream in("class_id\tmake\nm\t0\n");
    CHECK_THROWS_WITH_AS(load_taxonomy(in), doctest::Contains("missing required column"),
                         ParseError);
}

TEST_CASE("malformed row reports the line number") {
    CHECK_THROWS_WITH_AS(table_from("0\tA\tm\ts\tnope\t2001\tt\tsedan\t1\t1\tUSA\t0\n"),
                         doctest::Contains("line 2"), ParseError);
}

TEST_CASE("is_foreign must match country") {
    CHECK_THROWS_AS(table_from("0\tA\tm\ts\t2000\t2001\tt\tsedan\t1\t1\tUSA\t1\n"),
                    ValidationError);
}

TEST_CASE("ids assigned by file order when absent") {
    const ClassTable t = table_from(
        "\tA\tm\ts\t2000\t2001\tt\tsedan\t1\t1\tUSA\t0\n"
        "\tB\tm\ts\t2000\t2001\tt\tcoupe\t2\t2\tUSA\t0\n");
    CHECK(t.at(1).make == "B");
}

TEST_CASE("unknown body type maps to other") {
    const ClassTable t = table_from("0\tA\tm\ts\t2000\t2001\tt\tgyrocopter\t1\t1\tUSA\t0\n");
    CHECK(t.at(0).body_type == BodyType::Other);
}

TEST_CASE("attribute_of") {
    const ClassTable t = toy_table();
    CHECK(attribute_of(t, 0, AttributeKind::Make).cat == "Hummer");
    CHECK(attribute_of(t, 0, AttributeKind::Price).num == 55000.0);
    CHECK(attribute_of(t, 0, AttributeKind::BodyTypeKind).cat == "SUV");
    CHECK(attribute_of(t, 1, AttributeKind::Foreign).cat == "foreign");
    CHECK_THROWS_AS(attribute_of(t, 5, AttributeKind::Make), ValidationError);
    // stored zero round-trips as zero
    const ClassTable z = table_from("0\tA\tm\ts\t2000\t2001\tt\tsedan\t0\t1\tUSA\t0\n");
    CHECK(attribute_of(z, 0, AttributeKind::Price).num == 0.0);
}

TEST_CASE("attribute_accuracy") {
    const ClassTable t = toy_table();
    const std::vector<int> truths = {1, 2, 3};
    SUBCASE("identity") {
        CHECK(attribute_accuracy(truths, truths, AttributeKind::Make, t) == 1.0);
    }
    SUBCASE("class differs but make matches everywhere") {
        const std::vector<int> preds = {2, 1, 4};  // Honda,Honda,Ford vs Honda,Honda,Ford
        CHECK(attribute_accuracy(preds, truths, AttributeKind::Make, t) == 1.0);
    }
    SUBCASE("one make mismatch out of three") {
        const std::vector<int> preds = {1, 2, 0};  // Ford->Hummer at position 2
        CHECK(attribute_accuracy(preds, truths, AttributeKind::Make, t) ==
              doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("argument errors") {
        const std::vector<int> empty;
        const std::vector<int> two = {0, 1};
        CHECK_THROWS_AS(attribute_accuracy(empty, empty, AttributeKind::Make, t),
                        std::invalid_argument);
        CHECK_THROWS_AS(attribute_accuracy(two, truths, AttributeKind::Make, t),
                        std::invalid_argument);
    }
}

TEST_CASE("attribute accuracy dominates exact-class accuracy") {
    const ClassTable t = toy_table();
    // pseudo-random prediction/truth pairs over the toy table
    std::vector<int> preds, truths;
    unsigned s = 12345;
    for (int i = 0; i < 200; ++i) {
        s = s * 1103515245 + 12345;
        preds.push_back(static_cast<int>((s >> 16) % 5));
        s = s * 1103515245 + 12345;
        truths.push_back(static_cast<int>((s >> 16) % 5));
    }
    double exact = 0.0;
    for (size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == truths[i]) exact += 1.0;
    exact /= preds.size();
    for (AttributeKind kind : {AttributeKind::Make, AttributeKind::Model, AttributeKind::Price,
                               AttributeKind::BodyTypeKind, AttributeKind::Country,
                               AttributeKind::Foreign})
        CHECK(attribute_accuracy(preds, truths, kind, t) >= exact);
}

TEST_CASE("confusion_matrix") {
    const ClassTable t = toy_table();
    SUBCASE("perfect predictions give identity rows") {
        const std::vector<int> ids = {0, 1, 3};
        const ConfusionMatrix m = confusion_matrix(ids, ids, AttributeKind::Make, t);
        for (size_t r = 0; r < m.labels.size(); ++r) {
            double row_total = 0.0;
            for (double v : m.rows[r]) row_total += v;
            if (row_total > 0.0) CHECK(m.rows[r][r] == doctest::Approx(1.0));
        }
    }
    SUBCASE("all sedans predicted as coupes") {
        const ClassTable st = table_from(
            "0\tA\tm\ts\t2000\t2001\tt\tsedan\t1\t1\tUSA\t0\n"
            "1\tA\tm\ts\t2000\t2001\tt\tcoupe\t1\t1\tUSA\t0\n");
        const std::vector<int> preds = {1, 1};
        const std::vector<int> truths = {0, 0};
        const ConfusionMatrix m = confusion_matrix(preds, truths, AttributeKind::BodyTypeKind, st);
        const size_t sedan = 0, coupe = 1;  // enum order
        CHECK(m.rows[sedan][coupe] == doctest::Approx(1.0));
    }
    SUBCASE("mixed 6-sample toy matches hand count") {
        // truths:  Hummer Honda Honda Ford Ford Ford
        // preds:   Hummer Honda Ford  Ford Ford Honda
        const std::vector<int> truths = {0, 1, 2, 3, 4, 3};
        const std::vector<int> preds = {0, 1, 3, 4, 3, 1};
        const ConfusionMatrix m = confusion_matrix(preds, truths, AttributeKind::Make, t);
        // labels sorted: Ford, Honda, Hummer
        CHECK(m.counts[0][0] == 2.0);           // Ford->Ford twice
        CHECK(m.counts[0][1] == 1.0);           // Ford->Honda once
        CHECK(m.counts[1][0] == 1.0);           // Honda->Ford once
        CHECK(m.counts[1][1] == 1.0);
        CHECK(m.counts[2][2] == 1.0);
        CHECK(m.rows[0][0] == doctest::Approx(2.0 / 3.0));
        // trace of count matrix = number of attribute-correct predictions
        double trace = 0.0;
        for (size_t i = 0; i < m.labels.size(); ++i) trace += m.counts[i][i];
        CHECK(trace == 6.0 * attribute_accuracy(preds, truths, AttributeKind::Make, t));
    }
    SUBCASE("rows sum to one") {
        const std::vector<int> preds = {0, 1, 2, 3, 4};
        const std::vector<int> truths = {4, 3, 2, 1, 0};
        const ConfusionMatrix m = confusion_matrix(preds, truths, AttributeKind::BodyTypeKind, t);
        for (const auto& row : m.rows) {
            double total = 0.0;
            for (double v : row) total += v;
            if (total > 0.0) CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("save/load round-trips under attribute_of") {
    const ClassTable t = toy_table();
    std::ostringstream os;
    save_taxonomy(t, os);
    std::istringstream is(os.str());
    const ClassTable t2 = load_taxonomy(is);
    REQUIRE(t2.size() == t.size());
    for (int id = 0; id < t.size(); ++id)
        for (AttributeKind kind :
             {AttributeKind::Make, AttributeKind::Model, AttributeKind::Submodel,
              AttributeKind::BodyTypeKind, AttributeKind::Price, AttributeKind::Mpg,
              AttributeKind::Country, AttributeKind::Foreign})
            CHECK(attribute_of(t2, id, kind) == attribute_of(t, id, kind));
}
