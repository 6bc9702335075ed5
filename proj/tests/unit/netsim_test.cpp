#include <doctest.h>

#include <string>
#include <vector>

#include "cids/net.hpp"

using namespace cids;
using namespace cids::netsim;

namespace {

LanSegment make_lan(LanMode mode) {
    LanSegment lan(mode, 0, Ipv4::parse_or_throw("192.168.1.0"), 24);
    lan.add_endpoint({"gateway", Ipv4::parse_or_throw("192.168.1.1"), Role::gateway});
    lan.add_endpoint({"central", Ipv4::parse_or_throw("192.168.1.13"), Role::central});
    lan.add_endpoint({"node1", Ipv4::parse_or_throw("192.168.1.101"), Role::sensor});
    lan.add_endpoint({"node2", Ipv4::parse_or_throw("192.168.1.102"), Role::sensor});
    lan.add_endpoint({"attacker", Ipv4::parse_or_throw("192.168.1.66"), Role::attacker});
    return lan;
}

PacketRecord pkt_to(const std::string& src, const std::string& dst) {
    PacketRecord p;
    p.proto = Proto::tcp;
    p.src_ip = Ipv4::parse_or_throw(src);
    p.dst_ip = Ipv4::parse_or_throw(dst);
    p.dst_port = 80;
    return p;
}

std::vector<std::string> names(const std::vector<const Endpoint*>& eps) {
    std::vector<std::string> out;
    for (const auto* ep : eps) out.push_back(ep->name);
    return out;
}

}  // namespace

TEST_CASE("switched lan delivers unicast to the destination only") {
    LanSegment lan = make_lan(LanMode::switched);
    auto got = lan.deliver(pkt_to("192.168.1.66", "192.168.1.101"));
    CHECK(names(got) == std::vector<std::string>{"node1"});

    // Destination absent from the segment: nobody sees it.
    CHECK(lan.deliver(pkt_to("192.168.1.66", "192.168.1.177")).empty());
}

TEST_CASE("hub lan floods every endpoint except the sender") {
    LanSegment lan = make_lan(LanMode::hub);
    auto got = names(lan.deliver(pkt_to("192.168.1.66", "192.168.1.101")));
    CHECK(got == std::vector<std::string>{"central", "gateway", "node1", "node2"});
}

TEST_CASE("hub receivers are a superset of switched receivers") {
    LanSegment sw = make_lan(LanMode::switched);
    LanSegment hub = make_lan(LanMode::hub);
    for (const auto& dst : {"192.168.1.1", "192.168.1.101", "192.168.1.102", "192.168.1.200"}) {
        auto s = names(sw.deliver(pkt_to("192.168.1.66", dst)));
        auto h = names(hub.deliver(pkt_to("192.168.1.66", dst)));
        for (const auto& n : s) CHECK(std::find(h.begin(), h.end(), n) != h.end());
    }
}

TEST_CASE("endpoint lookup by name and ip") {
    LanSegment lan = make_lan(LanMode::switched);
    REQUIRE(lan.find_by_name("node2"));
    CHECK(lan.find_by_name("node2")->ip.str() == "192.168.1.102");
    REQUIRE(lan.find_by_ip(Ipv4::parse_or_throw("192.168.1.13")));
    CHECK(lan.find_by_ip(Ipv4::parse_or_throw("192.168.1.13"))->name == "central");
    CHECK(lan.find_by_name("nodeX") == nullptr);
    CHECK(lan.on_subnet(Ipv4::parse_or_throw("192.168.1.200")));
    CHECK(!lan.on_subnet(Ipv4::parse_or_throw("8.8.8.8")));
}

TEST_CASE("firewall default-denies and matches allow rules in order") {
    std::vector<WanHost> wan = {{"siem-host", Ipv4::parse_or_throw("203.0.113.10")}};
    FirewallPolicy fw({{"siem-host", 443}}, wan);

    PacketRecord ok = pkt_to("192.168.1.13", "203.0.113.10");
    ok.dst_port = 443;
    CHECK(fw.egress_check(ok) == FirewallPolicy::Verdict::allow);

    PacketRecord wrong_port = pkt_to("192.168.1.13", "203.0.113.10");
    wrong_port.dst_port = 80;
    CHECK(fw.egress_check(wrong_port) == FirewallPolicy::Verdict::drop);

    PacketRecord elsewhere = pkt_to("192.168.1.5", "8.8.8.8");
    elsewhere.dst_port = 443;
    CHECK(fw.egress_check(elsewhere) == FirewallPolicy::Verdict::drop);

    CHECK(fw.allow_count() == 1);
    CHECK(fw.drop_count() == 2);
    REQUIRE(fw.drop_log().size() == 2);
    CHECK(fw.drop_log()[0].dst_port == 80);
}

TEST_CASE("firewall allow entries accept ip, cidr, and wildcard hosts") {
    FirewallPolicy by_ip({{"8.8.8.8", 53}}, {});
    PacketRecord dns = pkt_to("192.168.1.5", "8.8.8.8");
    dns.dst_port = 53;
    CHECK(by_ip.egress_check(dns) == FirewallPolicy::Verdict::allow);

    FirewallPolicy by_cidr({{"203.0.113.0/24", 0}}, {});
    PacketRecord any_port = pkt_to("192.168.1.5", "203.0.113.99");
    any_port.dst_port = 9999;
    CHECK(by_cidr.egress_check(any_port) == FirewallPolicy::Verdict::allow);

    FirewallPolicy open({{"*", 0}}, {});
    CHECK(open.egress_check(pkt_to("192.168.1.5", "1.2.3.4")) == FirewallPolicy::Verdict::allow);
}

TEST_CASE("event loop dispatches by due time, then sender name, then order") {
    EventLoop<int> loop;
    loop.schedule(50, "b", 1);
    loop.schedule(50, "a", 2);
    loop.schedule(10, "z", 3);
    loop.schedule(50, "a", 4);

    std::vector<int> order;
    while (auto ev = loop.step()) order.push_back(ev->payload);
    CHECK(order == std::vector<int>{3, 2, 4, 1});
    CHECK(loop.now() == 50);
}

TEST_CASE("event loop rejects scheduling into the past") {
    EventLoop<int> loop;
    loop.schedule(10, "x", 1);
    REQUIRE(loop.step());
    CHECK_THROWS_AS(loop.schedule(5, "x", 2), InvariantError);
}

TEST_CASE("advance returns the due batch in order and moves the clock") {
    EventLoop<int> loop;
    loop.schedule(5, "a", 1);
    loop.schedule(15, "a", 2);
    loop.schedule(10, "a", 3);
    auto batch = loop.advance(10);
    REQUIRE(batch.size() == 2);
    CHECK(batch[0].payload == 1);
    CHECK(batch[1].payload == 3);
    CHECK(loop.now() == 10);
    CHECK(loop.pending() == 1);
}
