package shop;

import org.junit.Test;
import static org.junit.Assert.*;

public class CartTest {
    @Test
    public void testAddItem() {
        Cart cart = new Cart();
        assertEquals(1, cart.addItem());
        assertEquals(2, cart.addItem());
    }

    @Test
    public void testClear() {
        Cart cart = new Cart();
        cart.addItem();
        cart.clear();
        assertEquals(0, cart.size());
    }

    @Test
    public void testSize() {
        assertEquals(0, new Cart().size());
    }

    @Test
    public void testHelper() {
        assertEquals(0, new Cart().helper());
    }

    private Cart fresh() {
        return new Cart();
    }
}
