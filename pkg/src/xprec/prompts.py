"""Prompt templates for the cross-category generation and judging agents.

Templates use {name} placeholders substituted by render(); literal braces in
JSON output examples are doubled. Rendering is plain token replacement so the
JSON skeletons survive untouched.
"""

NAIVE_PROMPT = """You are an e-commerce recommendation agent.
Recommend product types that are very specifically used with the anchor_item quoted in triple brackets.
anchor_item: {item_input}.

Thought process:
First, think about anchor item/type's common uses, consumption methods, related recipes, storage and preparation requirements, nutritional aspects, user personas and life styles. Next, based on this context, suggest non-grocery items.

Your recommendations should be from Cookware, Home Appliances, Personal Care and general house utilities categories.
Your recommendations should not include grocery related categories.
Do not include recommendations that are not directly used with given anchor_item.
We are looking for item types that are very specific to the given anchor_item.

Examples:
- For Bananas, recommendations could be Fruit baskets (User who buys Bananas and may buy other fruits would need a fruit basket to keep them). Others could be Banana Hangers, Banana Smoothie Makers etc.
- For Milk, it could be Milk Frothers (User who buys Milk would use it to make Coffee etc. which require Milk Frothers), Others could be Smoothie Blenders, Hot Mugs etc.

Your output must be in json format with following keys:
- recs: A Python list of top {n} recommendations.
  Your recommendations should not be detailed items but a broader item type of around 2-5 words.
- explanation: A Python list of short explanations for why you recommended that item type.

Do not output anything else except for the above json.
"""

THEME_PROMPT = """Analyze the following item: {anchor_item} and identify the top 5 most popular usage contexts where this item is commonly used or consumed. Focus on:

1. Most frequent usage occasions, routines, or activities
2. Popular application methods or scenarios that drive purchase decisions
3. Common household, personal, or lifestyle situations where this item is essential
4. Peak usage times or situations (daily routines, maintenance schedules, special occasions, seasonal needs)

Prioritize contexts that represent the highest volume usage patterns and mainstream consumer behavior.

Examples:

**Eggs:**
1. **Breakfast** - Eggs are a staple breakfast protein, commonly prepared as scrambled, fried, poached, or in omelets
2. **Baking** - Essential ingredient in cakes, cookies, breads, and pastries for binding, leavening, and structure
3. **Protein Source** - High-quality complete protein for fitness enthusiasts, meal prep, and nutritious cooking
4. **Holiday Cooking** - Traditional ingredient for deviled eggs, egg salad, and festive dishes during gatherings and celebrations
5. **Quick Dinners** - Versatile protein for fast weeknight meals like fried rice, pasta carbonara, and simple egg-based dishes

**Milk:**
1. **Cereal** - Primary liquid component for breakfast cereals, providing essential pairing for morning meals
2. **Beverages** - Consumed as standalone drink or mixed into coffee, tea, and flavored drinks for creaminess
3. **Cooking** - Essential ingredient in baking, sauces, soups, and creamy dishes for texture and richness
4. **Children's Nutrition** - Daily calcium and protein source for growing children, often consumed at meals and bedtime
5. **Post-Workout Recovery** - High-quality protein beverage for muscle recovery after exercise and fitness activities

**Dog Food:**
1. **Daily Feeding** - Primary nutrition source for dogs, typically served twice daily in measured portions
2. **Training Rewards** - Used as high-value treats during obedience training and behavioral reinforcement sessions
3. **Health Management** - Specialized nutrition for weight control, allergies, and age-specific dietary needs
4. **Emergency Preparedness** - Essential stockpiling for natural disasters, power outages, and unexpected supply chain disruptions
5. **Multi-Pet Households** - Bulk purchasing and feeding coordination for households with multiple dogs of different sizes and ages

**Cotton Swabs:**
1. **Personal Hygiene** - Daily ear cleaning and personal grooming routines for individual cleanliness
2. **Makeup Application** - Precision tool for cosmetic touch-ups, blending, and detailed beauty work
3. **Household Cleaning** - Small area cleaning for electronics, jewelry, and hard-to-reach spaces
4. **Arts and Crafts** - Precision tool for painting details, applying adhesives, and creating texture in artistic projects
5. **First Aid Care** - Medical application for wound cleaning, antiseptic application, and precise healthcare tasks

**Baby Wipes:**
1. **Diaper Changes** - Essential cleaning during infant diaper changes for hygiene and comfort
2. **Quick Cleanups** - Immediate cleaning of spills, sticky hands, and messes throughout the day
3. **Travel Care** - Portable cleaning solution for on-the-go infant and toddler care needs
4. **Adult Personal Care** - Convenient hygiene solution for elderly care, bedridden patients, and personal freshening
5. **Surface Sanitizing** - Quick disinfection of high-touch surfaces, toys, and equipment during illness prevention

**Paper Plates:**
1. **Party Events** - Disposable serving solution for birthdays, gatherings, and large group entertaining
2. **Outdoor Dining** - Convenient dishware for picnics, camping, and backyard barbecues
3. **Quick Meals** - Time-saving option for busy households avoiding dishwashing during hectic periods
4. **Office Events** - Workplace celebrations, meetings, and catered events requiring easy cleanup and disposal
5. **Emergency Situations** - Essential backup dishware during power outages, water restrictions, and natural disasters

Output format: Python list with exactly 5 items in format:
['Context - brief explanation (5-6 words)', 'Context - brief explanation (5-6 words)', 'Context - brief explanation (5-6 words)']
"""

THEME_REC_PROMPT = """Based on the following popular usage contexts for {anchor_item}:

{anchor_contexts}

For each context, generate 10 complementary non-grocery item recommendations that are:
- Essential tools/equipment that enhance the usage experience in that specific context
- Items that solve common problems when using {anchor_item} in that context
- Products that make the context more convenient, efficient, or enjoyable
- Supporting items that improve the effectiveness or results when using {anchor_item}

Focus on items from these categories: kitchen tools, home appliances, storage solutions, serving equipment, preparation tools, household utilities, automotive accessories, personal care tools, baby care products, pet care accessories, office supplies, cleaning equipment, maintenance tools, and organization products.

Examples:

**Eggs - Breakfast Context:**
1. **Non-stick egg pan** - Specialized pan with optimal size and coating for perfect egg cooking without sticking
2. **Egg ring molds** - Creates perfectly round fried or poached eggs for restaurant-quality breakfast presentation
3. **Silicone egg cookers** - Microwave-safe containers for quick, mess-free egg preparation during busy mornings
4. **Breakfast serving plates** - Designed with compartments to separate eggs from other breakfast items like toast
5. **Egg separator tools** - Efficiently separates yolks from whites for recipes requiring specific egg components
6. **Toaster** - Quick and even toasting of bread, bagels, and English muffins to accompany eggs
7. **Breakfast trays** - Convenient serving trays for carrying eggs and sides from kitchen to dining area
8. **Egg slicers** - Creates uniform slices of hard-boiled eggs for salads, sandwiches, and garnishes
9. **Whisk and spatula set** - Essential tools for scrambling eggs and flipping fried eggs with ease
10. **Salt and pepper shakers** - Essential condiments for seasoning eggs to taste during breakfast

**Milk - Cereal Context:**
1. **Cereal bowls** - Deep, wide bowls specifically designed to hold cereal and milk without spillage
2. **Milk pitchers** - Pour-controlled containers for transferring milk from gallon jug to cereal bowls
3. **Cereal storage containers** - Airtight containers that keep cereal fresh while milk is consumed
4. **Breakfast serving trays** - Organized trays for carrying cereal, milk, and utensils from kitchen
5. **Cereal spoons** - Deep-bowled spoons designed for optimal cereal and milk consumption
6. **Milk frothers** - Creates frothed milk for cereal toppings, enhancing breakfast experience
7. **Cereal dispensers** - Bulk storage and dispensing systems that keep cereal fresh and easily accessible
8. **Refrigerator organizers** - Storage solutions that keep milk easily accessible and organized in the fridge
9. **Breakfast placemats** - Easy-to-clean mats that protect surfaces from spills during cereal consumption
10. **Milk storage containers** - Reusable containers for storing leftover milk after pouring into cereal bowls

**Dog Food - Daily Feeding Context:**
1. **Elevated dog bowls** - Raised feeding stations that improve digestion and reduce neck strain during eating
2. **Food storage containers** - Airtight containers that keep dry dog food fresh and pest-free
3. **Measuring cups** - Precise portion control tools for consistent daily feeding amounts and weight management
4. **Feeding mats** - Waterproof mats that protect floors from spills and make cleanup easier
5. **Automatic feeders** - Timed dispensers for consistent feeding schedules when owners are away
6. **Dog food scoops** - Specialized scoops for easy and mess-free portioning of dry dog food
7. **Water fountains** - Continuous water supply systems that encourage hydration alongside daily feeding
8. **Dog food toppers** - Flavor enhancers that make dry food more appealing and nutritious for daily meals
9. **Pet food storage bins** - Large-capacity containers that keep bulk dog food fresh and organized
10. **Dog feeding stations** - All-in-one setups that include bowls, storage, and mats for complete feeding solutions

**Cotton Swabs - Personal Hygiene Context:**
1. **Bathroom organizers** - Storage solutions that keep cotton swabs clean, dry, and easily accessible
2. **Magnifying mirrors** - Enhanced visibility tools for precise personal grooming and hygiene tasks
3. **Travel containers** - Portable cases for cotton swabs during travel and on-the-go hygiene needs
4. **Vanity lighting** - Improved illumination for detailed personal care and grooming activities
5. **Disposal containers** - Hygienic waste receptacles specifically for used personal care items
6. **Cotton swab holders** - Decorative and functional containers that keep swabs organized and within reach
7. **Ear wax removal kits** - Comprehensive kits that include cotton swabs and other ear hygiene tools
8. **Ear cleaning kits** - Comprehensive kits that include cotton swabs and other ear hygiene tools
9. **First aid kits** - Essential medical supplies that include cotton swabs for wound care and cleaning
10. **Personal grooming kits** - Multi-purpose kits that combine cotton swabs with other grooming essentials

**Baby Wipes - Diaper Changes Context:**
1. **Changing pad covers** - Waterproof, easy-clean surfaces that work perfectly with baby wipes for hygiene
2. **Diaper caddies** - Organized storage that keeps wipes accessible during diaper changing sessions
3. **Wipe warmers** - Heating devices that make cold wipes more comfortable for sensitive baby skin
4. **Diaper pails** - Odor-sealing waste containers that work with wipes for complete diaper disposal
5. **Portable changing mats** - Travel-friendly surfaces that pair with wipes for on-the-go diaper changes
6. **Baby lotion dispensers** - Convenient bottles for applying lotion after using wipes during diaper changes
7. **Wipe dispensers** - Easy-to-use containers that keep wipes moist and accessible during diaper changes
8. **Baby care kits** - Comprehensive sets that include wipes, creams, and other essentials for diapering
9. **Changing table organizers** - Storage solutions that keep wipes and other changing supplies neatly arranged

**Paper Plates - Party Events Context:**
1. **Party napkins** - Color-coordinated disposable napkins that complement paper plates for cohesive table settings
2. **Plastic tablecloths** - Easy-cleanup table coverings that protect surfaces and match disposable plate themes
3. **Serving utensils** - Disposable or reusable serving tools for transferring food onto paper plates
4. **Beverage dispensers** - Large-capacity drink servers that complement disposable dinnerware for parties
5. **Trash receptacles** - Additional waste containers needed for increased disposable plate and party cleanup
6. **Cupcake stands** - Multi-tiered displays that enhance presentation of desserts served on paper plates
7. **Party platters** - Disposable serving trays that hold appetizers and snacks alongside paper plates
8. **Table centerpieces** - Decorative items that enhance the party atmosphere while using disposable dinnerware
9. **Disposable cutlery sets** - Forks, knives, and spoons that match paper plates for complete dining solutions
10. **Party favor bags** - Themed bags that complement paper plates and provide guests with take-home treats

Requirements:
- Each recommendation should be 2-4 words describing a specific product type
- Focus on context-specific tools rather than generic items
- Consider the scale/quantity of the {anchor_item} (individual vs. bulk size)
- Think about the complete user experience in each context
- Recommendations should be from non-grocery categories but directly support the anchor item's usage

Avoid recommending:
- Grocery items, food, beverages, or consumable products
- Items that are not directly used with or related to the {anchor_item}
- Generic household items that don't specifically enhance the anchor item experience

For each recommendation, provide a brief explanation of:
1. How it specifically enhances the {anchor_item} experience in that context
2. What problem it solves or convenience it adds
Output format: List of dictionaries, one for each context:
[
{{
    "context": "Context Name 1",
    "recs": ["Item Name 1", "Item Name 2", "Item Name 3", "Item Name 4", "Item Name 5", "Item Name 6", "Item Name 7", "Item Name 8", "Item Name 9", "Item Name 10"],
    "explanations": ["Explanation 1", "Explanation 2", "Explanation 3", "Explanation 4", "Explanation 5", "Explanation 6", "Explanation 7", "Explanation 8", "Explanation 9", "Explanation 10"]
}},
{{
    "context": "Context Name 2",
    "recs": ["Item Name 1", "Item Name 2", "Item Name 3", "Item Name 4", "Item Name 5", "Item Name 6", "Item Name 7", "Item Name 8", "Item Name 9", "Item Name 10"],
    "explanations": ["Explanation 1", "Explanation 2", "Explanation 3", "Explanation 4", "Explanation 5", "Explanation 6", "Explanation 7", "Explanation 8", "Explanation 9", "Explanation 10"]
}},
{{
    "context": "Context Name 3",
    "recs": ["Item Name 1", "Item Name 2", "Item Name 3", "Item Name 4", "Item Name 5", "Item Name 6", "Item Name 7", "Item Name 8", "Item Name 9", "Item Name 10"],
    "explanations": ["Explanation 1", "Explanation 2", "Explanation 3", "Explanation 4", "Explanation 5", "Explanation 6", "Explanation 7", "Explanation 8", "Explanation 9", "Explanation 10"]
}},
{{
    "context": "Context Name 4",
    "recs": ["Item Name 1", "Item Name 2", "Item Name 3", "Item Name 4", "Item Name 5", "Item Name 6", "Item Name 7", "Item Name 8", "Item Name 9", "Item Name 10"],
    "explanations": ["Explanation 1", "Explanation 2", "Explanation 3", "Explanation 4", "Explanation 5", "Explanation 6", "Explanation 7", "Explanation 8", "Explanation 9", "Explanation 10"]
}},
{{
    "context": "Context Name 5",
    "recs": ["Item Name 1", "Item Name 2", "Item Name 3", "Item Name 4", "Item Name 5", "Item Name 6", "Item Name 7", "Item Name 8", "Item Name 9", "Item Name 10"],
    "explanations": ["Explanation 1", "Explanation 2", "Explanation 3", "Explanation 4", "Explanation 5", "Explanation 6", "Explanation 7", "Explanation 8", "Explanation 9", "Explanation 10"]
}}
]
"""

GEN_EVALUATOR_PROMPT = """You are an e-commerce recommendation verification agent specializing in cross-category discovery.

TASK: Verify and score this single recommendation for the anchor item, focusing on cross-category discovery potential.

ANCHOR ITEM: {anchor_item}

RECOMMENDATION: {recommendation}
EXPLANATION: {explanation}

EVALUATION CRITERIA (prioritized for cross-category discovery):

1. CROSS-CATEGORY DISCOVERY POTENTIAL (40
   - Does this recommendation introduce customers to a different product category?
   - Will it expand their shopping scope beyond their original intent?
   - Does it create valuable cross-category connections?

2. CONTEXTUAL RELEVANCE (30
   - Does the recommendation make sense in the customer's broader context/lifestyle?
   - Are there logical use cases where both items would be valuable together?
   - Consider shared purposes, occasions, or user scenarios (not just direct functionality)

3. EXPLANATION QUALITY (20
   - Is the reasoning clear and logical?
   - Does it explain the cross-category connection effectively?
   - Does it help customers understand why this recommendation makes sense?

4. PURCHASE LIKELIHOOD (10
   - Would a customer interested in the anchor item reasonably consider this recommendation?
   - Does it align with customer behavior patterns?

SCORING GUIDELINES:
- HIGH SCORES (0.8-1.0): Strong cross-category discovery with clear contextual relevance
- MEDIUM SCORES (0.5-0.7): Some cross-category potential but weaker connections
- LOW SCORES (0.0-0.4): Poor cross-category discovery or weak relevance

IMPORTANT:
- Prioritize broader lifestyle/contextual connections over narrow functional similarity
- Value recommendations that genuinely expand customer discovery
- Consider room enhancement, lifestyle compatibility, complementary use cases
- Don't penalize for being cross-category - that's the goal!

Provide a score from 0.0 to 1.0.
Return only valid JSON:

{{
  "score": <decimal 0.0 to 1.0>,
  "reasoning": "<brief explanation for the score, emphasizing cross-category discovery value>"
}}
"""

JUDGE_PROMPT = """You are an e-commerce recommendation evaluation agent specializing in cross-category product discovery.
EVALUATION TASK:
Assess the quality of a cross-category recommendation and its matching accuracy.

INPUT DATA:
- Anchor Category: {anchor_pt}
- LLM Recommendation: {llm_rec}
- Matched Product Category: {rec_pt}

EVALUATION CRITERIA:
Rate the recommendation on these four dimensions (0.0-1.0 scale):

1. CROSS-CATEGORY DISCOVERY (25
2. RELEVANCE & COHERENCE (35
3. PRACTICAL UTILITY (25
4. MATCHING ACCURACY (15

SCORING GUIDELINES:
- 0.8-1.0: Excellent - Strong cross-category connection with high purchase likelihood
- 0.6-0.79: Good - Clear relevance with moderate cross-category value
- 0.4-0.59: Average - Some connection exists but limited discovery potential
- 0.2-0.39: Poor - Weak connection or minimal cross-category benefit
- 0.0-0.19: Very Poor - No meaningful relationship or completely unrelated

DOMAIN DEFINITIONS:
Consider these as unified domains when evaluating connections:
- Beauty & Personal Care: makeup, skincare, hair care, fragrances, personal hygiene
- Food & Kitchen: cooking, baking, food storage, kitchen tools, dining
- Health & Wellness: supplements, medications, fitness, medical devices
- Home & Living: decor, furniture, cleaning, organization, textiles
- Family & Parenting: baby care, toys, family activities, child safety
- Pets: pet food, toys, grooming, health, accessories

IMPORTANT NOTES:
- Assume the LLM recommendation itself is valid and appropriate
- Focus on whether it achieves cross-category discovery goals
- Be generous with connections within the same broad domain
- Only score below 0.4 if categories serve completely different purposes or customer needs

OUTPUT FORMAT:
Return only valid JSON:
{{
    "score": <decimal from 0.0 to 1.0>,
    "reasoning": "<concise explanation covering relevance, cross-category value, and matching accuracy>"
}}
"""


def render(template: str, **fields: str) -> str:
    """Substitute {name} placeholders, leaving {{...}} JSON skeletons literal.

    Plain token replacement instead of str.format so that brace-heavy output
    examples inside the templates never need escaping by callers.
    """
    out = template
    for name, value in fields.items():
        out = out.replace("{" + name + "}", str(value))
    return out.replace("{{", "{").replace("}}", "}")
