"""Shared exception types for the xprec package."""


class XpError(Exception):
    """Base class for all xprec errors."""


class MalformedRecord(XpError):
    def __init__(self, line_no: int, reason: str = ""):
        self.line_no = line_no
        super().__init__(f"malformed record at line {line_no}: {reason}")


class DuplicateItemId(XpError):
    def __init__(self, item_id: str):
        self.item_id = item_id
        super().__init__(f"duplicate item_id: {item_id}")


class UnknownSegment(XpError):
    def __init__(self, value: str):
        self.value = value
        super().__init__(f"unknown segment: {value!r} (expected 'OG' or 'GM')")


class UnknownProductType(XpError):
    def __init__(self, pt: str):
        self.pt = pt
        super().__init__(f"unknown product type: {pt}")


class UnknownItem(XpError):
    def __init__(self, item_id: str):
        self.item_id = item_id
        super().__init__(f"unknown item: {item_id}")


class EmptyBaskets(XpError):
    pass


class LlmMalformedOutput(XpError):
    pass


class LlmTransport(XpError):
    pass


class LengthMismatch(XpError):
    pass


class DimensionMismatch(XpError):
    pass


class ShapeMismatch(XpError):
    pass


class BadHeadCount(XpError):
    pass


class NotScalar(XpError):
    pass


class OutOfRange(XpError):
    pass


class EmptyCart(XpError):
    pass


class EmptyPositives(XpError):
    pass


class EmptyTestSet(XpError):
    pass


class NonFiniteLoss(XpError):
    pass


class UnknownCart(XpError):
    def __init__(self, cart_id: str):
        self.cart_id = cart_id
        super().__init__(f"unknown cart: {cart_id}")


class TargetNonPositive(XpError):
    pass


class ConfigInvalid(XpError):
    pass
