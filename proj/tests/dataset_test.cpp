#include <gtest/gtest.h>

#include <sstream>

#include "evsurv/dataset.hpp"

using namespace evsurv;

namespace {

Dataset small() {
    Dataset d{{"f0", "f1"}, {}};
    d.records.push_back({{0.1, -2.5}, 3.25, 1, 3.25});
    d.records.push_back({{1.0 / 3.0, 1e-300}, 0.7, 0, 1.9});
    d.records.push_back({{-7.0, 42.0}, 12.0, 1, 12.0});
    return d;
}

Dataset parse(const std::string& text) {
    std::istringstream is(text);
    return read_csv(is);
}

}  // namespace

TEST(Csv, RoundTripIsExact) {
    const Dataset d = small();
    std::ostringstream os;
    write_csv(d, os);
    const Dataset back = parse(os.str());
    ASSERT_EQ(back.size(), d.size());
    EXPECT_EQ(back.feature_names, d.feature_names);
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_EQ(back.records[i].x, d.records[i].x);
        EXPECT_EQ(back.records[i].t_star, d.records[i].t_star);
        EXPECT_EQ(back.records[i].event, d.records[i].event);
        EXPECT_EQ(back.records[i].t_true, d.records[i].t_true);
    }
}

TEST(Csv, HeaderWithoutTruth) {
    Dataset d = small();
    d.records[0].t_true.reset();
    std::ostringstream os;
    write_csv(d, os);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "f0,f1,duration,event");
}

TEST(Csv, ColumnOrderIsFree) {
    const Dataset d = parse("event,a,duration,b\n1,0.5,2,3\n0,1.5,4,-1\n");
    EXPECT_EQ(d.feature_names, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(d.records[1].x, (std::vector<double>{1.5, -1}));
    EXPECT_EQ(d.records[1].event, 0);
    EXPECT_DOUBLE_EQ(d.censoring_rate(), 0.5);
}

TEST(Csv, Rejections) {
    auto message = [](const std::string& text) {
        try {
            parse(text);
        } catch (const DataError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    EXPECT_NE(message("f0,event\n1,1\n").find("missing column 'duration'"), std::string::npos);
    EXPECT_NE(message("f0,duration\n1,1\n").find("missing column 'event'"), std::string::npos);
    EXPECT_NE(message("f0,duration,event\n1,0,1\n").find("duration must be positive"), std::string::npos);
    EXPECT_NE(message("f0,duration,event\n1,-3,1\n").find("duration must be positive"), std::string::npos);
    EXPECT_NE(message("f0,duration,event\n1,2,2\n").find("event flag must be 0 or 1"), std::string::npos);
    EXPECT_NE(message("f0,duration,event\n1,2\n").find("expected 3 fields"), std::string::npos);
    EXPECT_NE(message("f0,duration,event\nabc,2,1\n").find("cannot parse"), std::string::npos);
    EXPECT_NE(message("f0,duration,event\n").find("no records"), std::string::npos);
}

TEST(DatasetOps, SubsetAndAccessors) {
    const Dataset d = small();
    const std::vector<std::size_t> idx{2, 0};
    const Dataset s = d.subset(idx);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s.records[0].t_star, 12.0);
    EXPECT_EQ(d.events(), (std::vector<int>{1, 0, 1}));
    EXPECT_TRUE(d.has_true_durations());
}
