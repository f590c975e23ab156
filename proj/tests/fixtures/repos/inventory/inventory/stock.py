from .models import Product
from .pricing import line_total


class StockEntry:
    def __init__(self, product, quantity=0):
        self.product = product
        self.quantity = quantity

    def value(self):
        return line_total(self.product, self.quantity)


class Inventory:
    def __init__(self, name):
        self.name = name
        self.entries = {}

    def add(self, product, quantity=1):
        entry = self.entries.get(product.sku)
        if entry is None:
            entry = StockEntry(product, 0)
            self.entries[product.sku] = entry
        entry.quantity += quantity
        return entry

    def remove(self, sku, quantity=1):
        entry = self.entries.get(sku)
        if entry is None:
            return False
        entry.quantity -= quantity
        if entry.quantity <= 0:
            del self.entries[sku]
        return True

    def total_value(self):
        total = 0.0
        for entry in self.entries.values():
            total += entry.value()
        return total

    def skus(self):
        return sorted(self.entries)
