#pragma once

// Built-in instrument definitions for the three heating stated-preference
// experiments: option names, attribute schemas, response-code labels and the
// survey prose rendered into prompts. Datasets may override any of this via
// their own `designs` block; these are the reference definitions used by the
// synthetic generator and the bundled fixtures.

#include "spsim/survey_data.hpp"

namespace spsim {

inline ExperimentDesign heating_design(ExperimentId id) {
    ExperimentDesign d;
    d.id = id;
    switch (id) {
        case ExperimentId::SP1: {
            d.option_names = {"Gas boiler", "Hydrogen ready boiler", "Air source heat pump"};
            d.code_labels = {"gas boiler", "hydrogen ready boiler", "air source heat pump"};
            d.attribute_schema = {
                "Fixed cost",
                "Annual cost of operation (in £) and the equivalent average per month",
                "Support scheme",
                "Maintenance visits",
                "CO2 emission (Equivalent number of single-person economy flights from London to "
                "Glasgow)"};
            d.experiment_intro =
                "Imagine that you live in {PROPERTY}. You are now in a situation where you need "
                "to replace the current (natural) gas boiler, because it has reached its "
                "end-of-life or has malfunctioned, and repair is impossible. In this survey, you "
                "are presented with 3 distinct heating technologies to choose from: gas boiler, "
                "hydrogen ready boiler, and air source heat pump.{EXPLAIN_LEADIN}";
            d.explain_leadin =
                "\n\nBrief descriptions of these technologies are available below:";
            d.option_explanations = {
                "Gas boiler: The traditional gas boiler utilises natural gas that is burnt to "
                "heat water, which is then circulated through radiators or underfloor heating "
                "systems to warm indoor spaces. Combustion of natural gas produces emissions, "
                "such as CO₂, at the point of use. This technology has been around for a number "
                "of decades.",
                "Hydrogen-ready boiler: A hydrogen-ready boiler is a gas-fired heating boiler "
                "which is capable of burning either natural gas or pure (100%) hydrogen. "
                "Hydrogen can be manufactured from water using electricity and is a carbon-free "
                "energy carrier. Combustion of hydrogen produces no carbon dioxide at the point "
                "of use. Furthermore, it is expected that the existing gas network can be "
                "adapted to supply hydrogen to properties. The technology is not yet available "
                "commercially but is expected to become available in the next few years.",
                "Air source heat pump: An air source heat pump uses electricity to extract heat "
                "from the ambient air outside (even when it is cold, e.g. during winter) and "
                "transfers it indoors to heat water, which is then circulated to provide "
                "heating. The principles are very similar to how air conditioning works, though "
                "in reverse (to heat, rather than to cool). Heat pumps do not produce emissions "
                "at the point of use but consume electricity. The technology has been available "
                "for domestic heating for a number of decades."};
            d.glossary_header =
                "These heating technology options will be described in terms of the following "
                "characteristics:";
            d.attribute_glossary = {
                "Fixed cost (in £): this is the one-off cost of the heating appliance itself, "
                "including installation.",
                "Annual cost of operation (in £) and the equivalent average per month: this is "
                "how much you will typically need to pay in a year for the heating, including "
                "maintenance costs.",
                "(Financial) Support scheme: this describes the availability of preferential "
                "loans (interest-free loan or 4% loan) to help with covering the cost of "
                "purchasing the specific heating option.",
                "Maintenance visits: this describes how many visits by a skilled technician are "
                "needed each year to maintain the equipment. The cost is included in the annual "
                "cost of operation.",
                "CO₂ emissions (in kg per year): this describes how much carbon dioxide (CO₂) is "
                "produced annually when using this heating technology, either directly (from "
                "combustion) or due to the generation of the required electricity. It is "
                "measured in kilograms of CO₂, but we also present for comparison an equivalent "
                "i.e. CO₂ emissions in terms of the number of single person economy flights from "
                "London to Glasgow."};
            d.closing =
                "Based on the above characteristics, we will be asking you to select one option "
                "that you find the most attractive in each scenario.";
            d.spc_header =
                "Your previous choices: The options, their characteristics and your choice "
                "based on your preference are:";
            break;
        }
        case ExperimentId::SP2: {
            d.option_names = {"No retrofit", "Minor retrofit", "Major retrofit"};
            d.code_labels = d.option_names;
            d.attribute_schema = {"Equipment cost", "Retrofit cost", "Nuisance duration",
                                  "Savings on monthly costs of heating & payback period",
                                  "Support scheme"};
            d.experiment_intro =
                "This part of the survey looks at retrofitting options for your property, which "
                "can accompany the replacement of the heating technology. By retrofit, we mean "
                "additional upgrades to the property that can help in making it more energy "
                "efficient, i.e. consume less energy whilst maintaining the same comfort. The "
                "context involves you living in {PROPERTY}. In this part of the survey, we will "
                "focus on 3 options for retrofit that can accompany the heating appliance "
                "installation: no retrofit, minor retrofit and major retrofit.{EXPLAIN_LEADIN} "
                "In the current context, the retrofit options will accompany any heating "
                "technology of your choice and the heating technology is therefore not "
                "specified in the following scenarios.";
            d.explain_leadin = " These options are described below.";
            d.option_explanations = {
                "No retrofit: You only replace the heating appliance.",
                "Minor retrofit: In addition to replacing your heating appliance, you decide to "
                "undertake some minor upgrades such as draught proofing, reduced infiltration "
                "or hot water tank insulation. In exchange, you reduce your energy consumption.",
                "Major retrofit: In addition to replacing your heating appliance and minor "
                "retrofit upgrades, you also decide to improve wall, floor and loft insulation "
                "as well as improved window insulation (double or triple glazing). This is all "
                "more expensive and causes more nuisance but leads to more substantial energy "
                "savings."};
            d.glossary_header =
                "These retrofit options will be described in terms of the following "
                "characteristics:";
            d.attribute_glossary = {
                "Equipment cost (in £): this is the one-off cost of the heating appliance "
                "itself, including installation; and will remain fixed for each scenario.",
                "Retrofit cost (in £): this is the one-off cost of the retrofit, including "
                "parts and labour.",
                "Nuisance duration (in days): this is how many days you may expect installation "
                "or retrofit works to be taking place. This may involve contractors working in "
                "your property and carrying out the retrofit works.",
                "Savings on monthly costs of heating (in £) and payback period (in years): this "
                "is how much you can expect to save on your energy bills as a result of the "
                "retrofit and the approximate period over which the retrofit cost will be "
                "recovered by these savings.",
                "(Financial) Support scheme: this describes the availability of preferential "
                "loans (interest-free loan or 4% loan) to help with covering the cost of the "
                "heating technology replacement and retrofit works."};
            d.closing =
                "Based on the above characteristics, we will be asking you to select one option "
                "that you find the most attractive in each scenario.";
            d.spc_header =
                "Your previous choices: The options, their characteristics and your choice "
                "based on your preference are below:";
            break;
        }
        case ExperimentId::SP3: {
            d.option_names = {"Full ownership", "Shared ownership", "Service-based"};
            d.code_labels = d.option_names;
            d.attribute_schema = {"Upfront cost", "Annual cost of operation (Average per month)",
                                  "Contract length", "Energy pricing",
                                  "Control and service flexibility"};
            d.experiment_intro =
                "This third part of the survey focuses on the ownership model for the heating "
                "system, i.e. who owns the appliances heating your property and how the system "
                "is controlled and paid for. The context involves you living in {PROPERTY}. In "
                "this part of the survey, we will focus on 3 ownership options for the heating "
                "appliance: full ownership, shared ownership and service-based.{EXPLAIN_LEADIN} "
                "In the current context, the ownership options are not specific to the type of "
                "heating technology and apply to any heating technology that you prefer.";
            d.explain_leadin = " These options are described below.";
            d.option_explanations = {
                "Full ownership: You fully own the heating system and you are responsible for "
                "the maintenance of the equipment and its operation.",
                "Shared ownership: You share ownership of a larger heating system with your "
                "neighbours/community. This reduces the overall cost of equipment and "
                "operation, but you potentially have less control over how the system is "
                "operated and maintained.",
                "Service-based: You do not need to purchase the equipment yourself as this is "
                "done by the service provider. Since you do not own the equipment there is no "
                "upfront cost. In exchange, you may need to pay more on a monthly basis, for "
                "the duration of the contract that you sign with the service provider."};
            d.glossary_header =
                "These ownership models will be described in terms of the following "
                "characteristics:";
            d.attribute_glossary = {
                "Upfront cost (in £): this is the one-off cost that you need to invest upfront, "
                "including equipment and installation.",
                "Annual cost of operation (in £): this is how much you will need to typically "
                "pay for the heating in a year (and the equivalent per month cost).",
                "Contract length (in years): this attribute tells you how many years you are "
                "contractually bound to a specific heating service provider and service.",
                "Energy pricing: this tells you whether the price of energy used to heat your "
                "home is fixed or may vary during the day, and how much in advance you are "
                "informed about the energy prices. The following arrangements are possible: (1) "
                "fixed, i.e. the prices are constant across hours and days. (2) can change "
                "during the day and you are informed 24 hours ahead of any changes. (3) can "
                "change during the day and you are informed 1 hour ahead of any changes.",
                "Control and service flexibility: this describes whether the operator can "
                "switch off the heating for 1 hour once a month, always informing you ahead of "
                "time, and how much you would be compensated for that. The following "
                "arrangements are possible: (1) You control the heating entirely, with no "
                "switching-off events. (2) Heating can be switched off for 1 hour a month, with "
                "notification 7 hours ahead. The compensation in pounds (£) per such event will "
                "be shown. (3) Heating can be switched off for 1 hour a month, with "
                "notification 1 hour ahead. The compensation in pounds (£) per such event will "
                "be shown."};
            d.closing =
                "Based on the above characteristics, we will be asking you to select one option "
                "that you find the most attractive in each scenario.";
            d.spc_header =
                "Your previous choices: The options, their characteristics and your choice "
                "based on your preference are below:";
            break;
        }
    }
    for (const auto& attr : d.attribute_schema) d.codings.push_back(default_attribute_coding(attr));
    return d;
}

inline std::map<ExperimentId, ExperimentDesign> heating_designs() {
    std::map<ExperimentId, ExperimentDesign> out;
    for (ExperimentId id : kAllExperiments) out.emplace(id, heating_design(id));
    return out;
}

}  // namespace spsim
