package shop;

import org.junit.Test;
import static org.junit.Assert.*;

public class InventoryChecks {
    @Test
    public void testRestock() {
        Inventory inv = new Inventory();
        inv.restock(3);
        assertEquals(3, inv.available());
    }
}
