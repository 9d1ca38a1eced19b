#include <gtest/gtest.h>

#include "tcrank/tcrank.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace tcrank;

namespace {

IngestResult parse(const std::string& text) {
    std::istringstream in(text);
    return read_long_csv(in);
}

std::string parse_error(const std::string& text) {
    try {
        parse(text);
    } catch (const ParseError& e) {
        return e.what();
    }
    return "";
}

}

TEST(LongCsv, SmallCompleteGene) {
    const auto r = parse(
        "gene,condition,replicate,time,value\n"
        "g1,A,r1,0,1.5\n"
        "g1,A,r1,1,2.5\n"
        "g1,A,r1,2,3.5\n"
        "g1,A,r2,0,-1\n"
        "g1,A,r2,1,0\n"
        "g1,A,r2,2,1e-3\n"
    );
    ASSERT_EQ(r.dataset.genes.size(), 1u);
    EXPECT_TRUE(r.skipped.empty());
    EXPECT_EQ(r.dataset.k(), 3);
    const auto& reps = r.dataset.genes[0].conditions[0];
    ASSERT_EQ(reps.size(), 2u);
    EXPECT_EQ(reps[0].values[2], 3.5);
    EXPECT_EQ(reps[1].values[2], 1e-3);
}

TEST(LongCsv, ColumnsByNameAndQuotes) {
    const auto r = parse(
        "value,time,replicate,condition,gene\n"
        "1,t1,r1,A,\"gene, one\"\n"
        "2,t2,r1,A,\"gene, one\"\n"
        "3,t1,r2,A,\"gene, one\"\n"
        "4,t2,r2,A,\"gene, one\"\n"
    );
    ASSERT_EQ(r.dataset.genes.size(), 1u);
    EXPECT_EQ(r.dataset.genes[0].id, "gene, one");
}

TEST(LongCsv, DuplicateRowNamesKey) {
    const auto msg = parse_error(
        "gene,condition,replicate,time,value\n"
        "g1,A,r1,0,1\n"
        "g1,A,r1,0,2\n"
    );
    EXPECT_NE(msg.find("line 3"), std::string::npos);
    EXPECT_NE(msg.find("(g1,A,r1,0)"), std::string::npos);
    EXPECT_NE(msg.find("line 2"), std::string::npos);
}

TEST(LongCsv, MalformedInputs) {
    EXPECT_NE(parse_error("gene,condition,replicate,value\ng,A,r,1\n").find("time"), std::string::npos);
    EXPECT_NE(parse_error("gene,condition,replicate,time,value\ng,A,r,0,abc\n").find("line 2"), std::string::npos);
    EXPECT_NE(parse_error("gene,condition,replicate,time,value\ng,A,r,0\n").find("expected 5 fields"), std::string::npos);
    EXPECT_NE(parse_error("gene,condition,replicate,time,value\n").find("no data rows"), std::string::npos);
    EXPECT_NE(parse_error(
        "gene,condition,replicate,time,value\n"
        "g,A,r,0,1\ng,B,r,0,1\ng,C,r,0,1\n"
    ).find("at most two conditions"), std::string::npos);
}

TEST(LongCsv, IncompleteGeneIsSkipped) {
    const auto r = parse(
        "gene,condition,replicate,time,value\n"
        "good,A,r1,0,1\ngood,A,r1,1,2\ngood,A,r2,0,3\ngood,A,r2,1,4\n"
        "gap,A,r1,0,1\ngap,A,r1,1,NA\ngap,A,r2,0,3\ngap,A,r2,1,4\n"
        "short,A,r1,0,1\nshort,A,r2,0,3\nshort,A,r2,1,4\n"
    );
    ASSERT_EQ(r.dataset.genes.size(), 1u);
    EXPECT_EQ(r.dataset.genes[0].id, "good");
    ASSERT_EQ(r.skipped.size(), 2u);
    for (const auto& s : r.skipped) {
        EXPECT_EQ(s.reason.rfind("IncompleteGene", 0), 0u) << s.reason;
    }
}

TEST(LongCsv, TimeOrdering) {
    const std::string rows =
        "gene,condition,replicate,time,value\n"
        "g,A,r1,10,1\ng,A,r1,2,2\ng,A,r2,10,3\ng,A,r2,2,4\n";
    auto r = parse(rows);
    EXPECT_EQ(r.dataset.time_labels, (std::vector<std::string>{ "2", "10" }));
    EXPECT_EQ(r.dataset.genes[0].conditions[0][0].values[0], 2);

    r = parse("# time_order: 10,2\n" + rows);
    EXPECT_EQ(r.dataset.time_labels, (std::vector<std::string>{ "10", "2" }));
    EXPECT_EQ(r.dataset.genes[0].conditions[0][0].values[0], 1);
}

TEST(LongCsv, RoundTrip) {
    SimulationConfig config;
    config.genes = 50;
    config.nonconstant = 5;
    config.seed = 80;
    const auto data = simulate_dataset(config, 0).dataset;
    std::stringstream buffer;
    write_long_csv(buffer, data);
    const auto back = read_long_csv(buffer).dataset;
    ASSERT_EQ(back.genes.size(), data.genes.size());
    EXPECT_EQ(back.time_labels, data.time_labels);
    for (std::size_t g = 0; g < data.genes.size(); ++g) {
        for (std::size_t r = 0; r < 3; ++r) {
            EXPECT_EQ(back.genes[g].conditions[0][r].values, data.genes[g].conditions[0][r].values);
        }
    }
}

TEST(SideFiles, TruthAndManifest) {
    const auto dir = std::filesystem::temp_directory_path() / "tcrank_io_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);

    TruthTable t;
    t.genes = { "a", "b" };
    t.truth = { 1, 0 };
    t.deviation = { 2.5, 0 };
    write_truth_csv((dir / "truth.csv").string(), t);
    const auto back = read_truth_csv((dir / "truth.csv").string());
    EXPECT_EQ(back.genes, t.genes);
    EXPECT_EQ(back.truth, t.truth);
    EXPECT_EQ(back.deviation, t.deviation);

    {
        std::ofstream out(dir / "hello.txt", std::ios::binary);
        out << "hello";
    }
    // CRC-32 of "hello".
    EXPECT_EQ(file_crc32((dir / "hello.txt").string()), 0x3610a686ul);
    write_manifest(dir.string(), { "truth.csv", "hello.txt" });
    std::ifstream in(dir / "manifest.tsv");
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_NE(all.find("hello.txt\t5\t3610a686"), std::string::npos) << all;
    EXPECT_NE(all.find("truth.csv"), std::string::npos);
    std::filesystem::remove_all(dir);
}
